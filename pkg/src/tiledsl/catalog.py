"""Built-in kernel specs: add, silu, softmax, rms_norm, mm, bmm, addmm, conv2d.

Arrangements are recorded as meta-op sequences.  The matmul arrangement is
written once, parameterized over parameter names, and reused by addmm (same
tiling, extra epilogue) and conv2d (implicit-GEMM pre-ops compose with it).
"""

from __future__ import annotations

from .htensor import FULL, HTensor, new_param
from .symexpr import SymExpr, cdiv, sym
from .tileir import (
    Accumulate,
    ArrangeOp,
    BinOp,
    ConstF,
    Dot,
    ForRange,
    IConst,
    KernelSpec,
    Let,
    Load,
    Local,
    ParamSpec,
    Reduce,
    ShapeOf,
    SpecError,
    Store,
    UnOp,
    Var,
    Zeros,
    apply_arrange_op,
)

CATALOG_NAMES = ("add", "silu", "softmax", "rms_norm", "mm", "bmm", "addmm", "conv2d")
OUT_OF_SCOPE = ("sdpa", "rope")

RMS_NORM_EPS = 1e-6


class OutOfScopeError(SpecError):
    pass


class _Builder:
    """Replays meta-ops while recording them, so later ops can consult the
    arranged shape of an earlier parameter."""

    def __init__(self, name: str, rank: int, shape_constexpr: bool = False):
        self.tensor: HTensor = new_param(name, rank, "f32", shape_constexpr)
        self.ops: list[ArrangeOp] = []

    def _do(self, op: ArrangeOp) -> "_Builder":
        self.tensor = apply_arrange_op(self.tensor, op)
        self.ops.append(op)
        return self

    def tile(self, shape, strides=None):
        return self._do(ArrangeOp("tile", shape=tuple(shape),
                                  strides=None if strides is None else tuple(strides)))

    def expand(self, shape):
        return self._do(ArrangeOp("expand", shape=tuple(shape)))

    def squeeze(self, dim, depth=0):
        return self._do(ArrangeOp("squeeze", depth=depth, dim=dim))

    def permute(self, order):
        return self._do(ArrangeOp("permute", order=tuple(order)))

    def flatten(self, start=0, end=None):
        return self._do(ArrangeOp("flatten", start=start, end=end))

    def ravel(self):
        return self._do(ArrangeOp("ravel"))

    @property
    def shape(self) -> tuple[SymExpr, ...]:
        return self.tensor.shape


def _mm_arrange(a: _Builder, b: _Builder, c: _Builder, bm, bn, bk, depth_base=0):
    """Tile c into (bm, bn) blocks, a by rows of (bm, bk) blocks, b by columns
    of (bk, bn) blocks, then align row and column blocks across the grid."""
    lead = depth_base  # extra leading dims already pinned at level 0 (bmm batch)
    keep = [-1] * lead
    c.tile(tuple([1] * lead + [bm, bn]))

    a.tile(tuple([1] * lead + [bm, bk]))
    a.tile(tuple([1] * lead + [1, FULL]))
    a.expand(tuple(keep + [-1, c.shape[lead + 1]]))
    for _ in range(lead):
        a.squeeze(0, depth=1)
    a.squeeze(0, depth=1)

    b.tile(tuple([1] * lead + [bk, bn]))
    b.tile(tuple([1] * lead + [FULL, 1]))
    b.expand(tuple(keep + [c.shape[lead], -1]))
    for _ in range(lead):
        b.squeeze(0, depth=1)
    b.squeeze(1, depth=1)

    for _ in range(lead):
        c.squeeze(0, depth=1)
        a.squeeze(0, depth=2)
        b.squeeze(0, depth=2)


def _mm_application(a: str, b: str, c: str, bm, bn) -> tuple:
    return (
        Let("acc", Zeros((bm, bn), "f32")),
        ForRange(
            "k",
            ShapeOf(a, 0, "nest"),
            (Accumulate("acc", Dot(Load(a, (Var("k"),)), Load(b, (Var("k"),)))),),
        ),
        Store(c, Local("acc")),
    )


def _make_add() -> KernelSpec:
    bs = sym("BLOCK_SIZE")
    builders = {n: _Builder(n, 1).tile((bs,)) for n in ("input", "other", "output")}
    return KernelSpec(
        name="add",
        params=(
            ParamSpec("input", 1, "f32", "in"),
            ParamSpec("other", 1, "f32", "in"),
            ParamSpec("output", 1, "f32", "out"),
        ),
        meta=("BLOCK_SIZE",),
        arrangement={n: tuple(b.ops) for n, b in builders.items()},
        application=(Store("output", BinOp("+", Load("input"), Load("other"))),),
    )


def _make_silu() -> KernelSpec:
    bs = sym("BLOCK_SIZE")
    builders = {n: _Builder(n, 1).tile((bs,)) for n in ("input", "output")}
    return KernelSpec(
        name="silu",
        params=(
            ParamSpec("input", 1, "f32", "in"),
            ParamSpec("output", 1, "f32", "out"),
        ),
        meta=("BLOCK_SIZE",),
        arrangement={n: tuple(b.ops) for n, b in builders.items()},
        application=(
            Let("x", Load("input")),
            Store("output", BinOp("*", Local("x"), UnOp("sigmoid", Local("x")))),
        ),
    )


def _make_softmax() -> KernelSpec:
    cp = sym("COLS_PADDED")
    builders = {n: _Builder(n, 2).tile((1, cp)) for n in ("input", "output")}
    neg_inf = float("-inf")
    return KernelSpec(
        name="softmax",
        params=(
            ParamSpec("input", 2, "f32", "in"),
            ParamSpec("output", 2, "f32", "out"),
        ),
        meta=("COLS_PADDED",),
        arrangement={n: tuple(b.ops) for n, b in builders.items()},
        application=(
            # -inf fill is neutral for the row max and turns into exact
            # zeros after exp, so padded lanes never pollute the sum.
            Let("x", Load("input", other=neg_inf)),
            Let("m", Reduce("max", 1, Local("x"))),
            Let("e", UnOp("exp", BinOp("-", Local("x"), Local("m")))),
            Let("s", Reduce("sum", 1, Local("e"))),
            Store("output", BinOp("/", Local("e"), Local("s"))),
        ),
    )


def _make_rms_norm() -> KernelSpec:
    cp = sym("COLS_PADDED")
    rows = sym("input_size_0")
    row_like = {}
    for n in ("input", "output"):
        b = _Builder(n, 2).tile((1, cp))
        b.squeeze(1)  # one column block per row; checked at launch
        b.squeeze(0, depth=1)
        row_like[n] = b
    w = _Builder("weight", 1).tile((cp,))
    w.tile((FULL,))
    w.expand((rows,))
    w.squeeze(0, depth=1)
    return KernelSpec(
        name="rms_norm",
        params=(
            ParamSpec("input", 2, "f32", "in"),
            ParamSpec("weight", 1, "f32", "in"),
            ParamSpec("output", 2, "f32", "out"),
        ),
        meta=("COLS_PADDED",),
        arrangement={
            "input": tuple(row_like["input"].ops),
            "weight": tuple(w.ops),
            "output": tuple(row_like["output"].ops),
        },
        application=(
            Let("x", Load("input")),
            Let("ss", Reduce("sum", 0, BinOp("*", Local("x"), Local("x")))),
            # Mean over the true column count, not the padded lane count.
            Let("ms", BinOp("/", Local("ss"), ShapeOf("input", 1, "source"))),
            Store(
                "output",
                BinOp(
                    "*",
                    BinOp(
                        "/",
                        Local("x"),
                        UnOp("sqrt", BinOp("+", Local("ms"), ConstF(RMS_NORM_EPS))),
                    ),
                    Load("weight"),
                ),
            ),
        ),
    )


def _make_mm() -> KernelSpec:
    bm, bn, bk = sym("BLOCK_SIZE_M"), sym("BLOCK_SIZE_N"), sym("BLOCK_SIZE_K")
    a, b, c = _Builder("input", 2), _Builder("other", 2), _Builder("output", 2)
    _mm_arrange(a, b, c, bm, bn, bk)
    return KernelSpec(
        name="mm",
        params=(
            ParamSpec("input", 2, "f32", "in"),
            ParamSpec("other", 2, "f32", "in"),
            ParamSpec("output", 2, "f32", "out"),
        ),
        meta=("BLOCK_SIZE_M", "BLOCK_SIZE_N", "BLOCK_SIZE_K"),
        arrangement={"input": tuple(a.ops), "other": tuple(b.ops), "output": tuple(c.ops)},
        application=_mm_application("input", "other", "output", bm, bn),
    )


def _make_bmm() -> KernelSpec:
    bm, bn, bk = sym("BLOCK_SIZE_M"), sym("BLOCK_SIZE_N"), sym("BLOCK_SIZE_K")
    a, b, c = _Builder("input", 3), _Builder("other", 3), _Builder("output", 3)
    _mm_arrange(a, b, c, bm, bn, bk, depth_base=1)
    return KernelSpec(
        name="bmm",
        params=(
            ParamSpec("input", 3, "f32", "in"),
            ParamSpec("other", 3, "f32", "in"),
            ParamSpec("output", 3, "f32", "out"),
        ),
        meta=("BLOCK_SIZE_M", "BLOCK_SIZE_N", "BLOCK_SIZE_K"),
        arrangement={"input": tuple(a.ops), "other": tuple(b.ops), "output": tuple(c.ops)},
        application=_mm_application("input", "other", "output", bm, bn),
    )


def _make_addmm() -> KernelSpec:
    bm, bn, bk = sym("BLOCK_SIZE_M"), sym("BLOCK_SIZE_N"), sym("BLOCK_SIZE_K")
    a, b, c = _Builder("mat1", 2), _Builder("mat2", 2), _Builder("output", 2)
    _mm_arrange(a, b, c, bm, bn, bk)
    addend = _Builder("input", 2).tile((bm, bn))
    core = _mm_application("mat1", "mat2", "output", bm, bn)
    epilogue = Store(
        "output",
        BinOp(
            "+",
            BinOp("*", Load("beta"), Load("input")),
            BinOp("*", Load("alpha"), Local("acc")),
        ),
    )
    return KernelSpec(
        name="addmm",
        params=(
            ParamSpec("input", 2, "f32", "in"),
            ParamSpec("mat1", 2, "f32", "in"),
            ParamSpec("mat2", 2, "f32", "in"),
            ParamSpec("beta", 0, "f32", "in"),
            ParamSpec("alpha", 0, "f32", "in"),
            ParamSpec("output", 2, "f32", "out"),
        ),
        meta=("BLOCK_SIZE_M", "BLOCK_SIZE_N", "BLOCK_SIZE_K"),
        arrangement={
            "input": tuple(addend.ops),
            "mat1": tuple(a.ops),
            "mat2": tuple(b.ops),
            "output": tuple(c.ops),
        },
        application=core[:-1] + (epilogue,),
    )


def conv2d_pre_ops() -> dict[str, list[ArrangeOp]]:
    """Implicit-GEMM pre-arrangement: image to (N*P*Q, C*R*S), filter to
    (C*R*S, K), output to (N*P*Q, K); matmul tiling then applies as-is."""
    f1, f2, f3 = sym("filter_size_1"), sym("filter_size_2"), sym("filter_size_3")
    image = _Builder("input", 4, shape_constexpr=True)
    image.tile((1, f1, f2, f3), strides=(-1, -1, 1, 1))
    image.squeeze(1)
    image.squeeze(0, depth=1)
    image.ravel()
    image.flatten(0, 3)
    image.flatten(1, None)
    filt = _Builder("filter", 4, shape_constexpr=True)
    filt.flatten(1, None)
    filt.permute((1, 0))
    out = _Builder("output", 4, shape_constexpr=True)
    out.permute((0, 2, 3, 1))
    out.flatten(0, 3)
    return {"input": image, "filter": filt, "output": out}


def _make_conv2d() -> KernelSpec:
    bm, bn, bk = sym("BLOCK_SIZE_M"), sym("BLOCK_SIZE_N"), sym("BLOCK_SIZE_K")
    pre = conv2d_pre_ops()
    _mm_arrange(pre["input"], pre["filter"], pre["output"], bm, bn, bk)
    return KernelSpec(
        name="conv2d",
        params=(
            ParamSpec("input", 4, "f32", "in"),
            ParamSpec("filter", 4, "f32", "in"),
            ParamSpec("output", 4, "f32", "out"),
        ),
        meta=("BLOCK_SIZE_M", "BLOCK_SIZE_N", "BLOCK_SIZE_K"),
        arrangement={name: tuple(b.ops) for name, b in pre.items()},
        application=_mm_application("input", "filter", "output", bm, bn),
        shape_constexpr=True,
    )


_MAKERS = {
    "add": _make_add,
    "silu": _make_silu,
    "softmax": _make_softmax,
    "rms_norm": _make_rms_norm,
    "mm": _make_mm,
    "bmm": _make_bmm,
    "addmm": _make_addmm,
    "conv2d": _make_conv2d,
}


def catalog(name: str) -> KernelSpec:
    if name in OUT_OF_SCOPE:
        raise OutOfScopeError(f"kernel {name!r} is out of scope for this artifact")
    try:
        maker = _MAKERS[name]
    except KeyError:
        raise SpecError(
            f"unknown kernel {name!r}; available: {', '.join(CATALOG_NAMES)}"
        ) from None
    return maker()
