"""Tile-level application IR, kernel specs, typechecking, and JSON I/O.

A KernelSpec bundles parameter declarations, constexpr meta-parameters, a
per-parameter arrangement program (meta-op sequence), and the application
statements each program executes over its tiles.  ``typecheck`` replays the
arrangement, validates the grid, lowers index maps, and annotates every
expression with its tile shape; both the simulator and the emitter consume
the resulting CheckedSpec so addressing is derived exactly once.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from . import arrange as _arrange
from . import htensor as _ht
from . import symexpr as _se
from .arrange import GridSpec, IndexMap
from .htensor import HTensor, new_param
from .symexpr import ONE, SymExpr, simplify

SCALAR_KINDS = _ht.SCALAR_KINDS
ROLES = ("in", "out")
ARRANGE_OPS = ("tile", "expand", "squeeze", "permute", "flatten", "ravel")
BIN_OPS = ("+", "-", "*", "/")
UN_OPS = ("exp", "sqrt", "neg", "sigmoid")
REDUCE_OPS = ("sum", "max")


class SpecError(Exception):
    pass


class TypecheckError(SpecError):
    pass


class SpecParseError(SpecError):
    """JSON spec rejected; message carries a path into the document."""


# --- scalar (integer) expressions used for nest indices -------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IConst:
    value: int


ScalarExpr = Union[Var, IConst]


# --- tile expressions -----------------------------------------------------

@dataclass(frozen=True)
class Load:
    param: str
    nests: tuple[ScalarExpr, ...] = ()
    other: float = 0.0  # fill value for masked lanes


@dataclass(frozen=True)
class Local:
    name: str


@dataclass(frozen=True)
class ConstF:
    value: float


@dataclass(frozen=True)
class BinOp:
    op: str
    a: "TileExpr"
    b: "TileExpr"


@dataclass(frozen=True)
class UnOp:
    op: str
    a: "TileExpr"


@dataclass(frozen=True)
class Dot:
    a: "TileExpr"
    b: "TileExpr"


@dataclass(frozen=True)
class Zeros:
    shape: tuple[SymExpr, ...]
    kind: str = "f32"


@dataclass(frozen=True)
class Reduce:
    op: str
    axis: int
    a: "TileExpr"


@dataclass(frozen=True)
class ShapeOf:
    """Extent query: a nest level's tile count, or a source dimension size."""

    param: str
    dim: int
    of: str = "nest"  # "nest" | "source"


TileExpr = Union[Load, Local, ConstF, BinOp, UnOp, Dot, Zeros, Reduce, ShapeOf]


# --- statements -----------------------------------------------------------

@dataclass(frozen=True)
class Let:
    name: str
    expr: TileExpr


@dataclass(frozen=True)
class Accumulate:
    name: str
    expr: TileExpr


@dataclass(frozen=True)
class Store:
    param: str
    expr: TileExpr


@dataclass(frozen=True)
class ForRange:
    var: str
    extent: Union[SymExpr, ShapeOf]
    body: tuple["TileStmt", ...]


TileStmt = Union[Let, Accumulate, Store, ForRange]


# --- kernel spec ----------------------------------------------------------

@dataclass(frozen=True)
class ParamSpec:
    name: str
    rank: int
    kind: str
    role: str


@dataclass(frozen=True)
class ArrangeOp:
    op: str
    depth: int = 0
    shape: Optional[tuple[Union[SymExpr, int], ...]] = None
    strides: Optional[tuple[Union[SymExpr, int], ...]] = None
    dim: Optional[int] = None
    order: Optional[tuple[int, ...]] = None
    start: Optional[int] = None
    end: Optional[int] = None

    def __post_init__(self):
        # Normalize shape/stride entries: -1 stays the keep/full/default
        # sentinel, every other integer becomes a constant expression.
        def norm(entries):
            if entries is None:
                return None
            return tuple(
                x if (isinstance(x, int) and x == -1) else _se.wrap(x)
                for x in entries
            )

        object.__setattr__(self, "shape", norm(self.shape))
        object.__setattr__(self, "strides", norm(self.strides))


@dataclass(frozen=True)
class KernelSpec:
    name: str
    params: tuple[ParamSpec, ...]
    meta: tuple[str, ...]
    arrangement: dict[str, tuple[ArrangeOp, ...]]
    application: tuple[TileStmt, ...]
    shape_constexpr: bool = False

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise SpecError(f"unknown parameter {name!r}")

    def symbol_names(self) -> frozenset:
        names = set(self.meta)
        for p in self.params:
            for i in range(p.rank):
                names.add(f"{p.name}_size_{i}")
                names.add(f"{p.name}_stride_{i}")
        return frozenset(names)

    def __post_init__(self):
        seen = set()
        for p in self.params:
            if p.name in seen:
                raise SpecError(f"duplicate parameter {p.name!r}")
            seen.add(p.name)
            if p.kind not in SCALAR_KINDS:
                raise SpecError(f"parameter {p.name!r} has unknown kind {p.kind!r}")
            if p.role not in ROLES:
                raise SpecError(f"parameter {p.name!r} has unknown role {p.role!r}")
        meta_seen = set()
        for m in self.meta:
            if m in meta_seen:
                raise SpecError(f"duplicate meta-parameter symbol {m!r}")
            meta_seen.add(m)
        derived = set()
        for p in self.params:
            for i in range(p.rank):
                derived.add(f"{p.name}_size_{i}")
                derived.add(f"{p.name}_stride_{i}")
        clash = meta_seen & derived
        if clash:
            raise SpecError(f"meta symbols collide with parameter symbols: {sorted(clash)}")
        tensor_names = {p.name for p in self.params if p.rank >= 1}
        if set(self.arrangement) != tensor_names:
            raise SpecError(
                "arrangement must cover exactly the tensor parameters; "
                f"got {sorted(self.arrangement)} for {sorted(tensor_names)}"
            )


def apply_arrange_op(tensor: HTensor, op: ArrangeOp) -> HTensor:
    if op.depth > 0:
        nudged = dataclasses.replace(op, depth=op.depth - 1)
        return tensor.set_inner(apply_arrange_op(tensor.get_inner(), nudged))
    if op.op == "tile":
        return tensor.tile(op.shape, op.strides)
    if op.op == "expand":
        return tensor.expand(op.shape)
    if op.op == "squeeze":
        return tensor.squeeze(op.dim)
    if op.op == "permute":
        return tensor.permute(op.order)
    if op.op == "flatten":
        return tensor.flatten(op.start if op.start is not None else 0, op.end)
    if op.op == "ravel":
        return tensor.ravel()
    raise SpecError(f"unknown arrangement op {op.op!r}")


def build_arrangement(spec: KernelSpec) -> list[tuple[str, HTensor]]:
    out = []
    for p in spec.params:
        if p.rank < 1:
            continue
        tensor = new_param(p.name, p.rank, p.kind, spec.shape_constexpr)
        for op in spec.arrangement[p.name]:
            tensor = apply_arrange_op(tensor, op)
        out.append((p.name, tensor))
    return out


# --- typechecking ---------------------------------------------------------

Shape = tuple[SymExpr, ...]


@dataclass(frozen=True)
class CheckedSpec:
    spec: KernelSpec
    arrangement: tuple[tuple[str, HTensor], ...]
    grid: GridSpec
    index_maps: dict[str, IndexMap]
    tile_shapes: dict[str, Shape]  # per tensor parameter, innermost level
    expr_shapes: dict[int, Shape]  # id(expr) -> annotated tile shape


def _broadcast(a: Shape, b: Shape, ctx: str) -> Shape:
    out = []
    for i in range(1, max(len(a), len(b)) + 1):
        da = a[-i] if i <= len(a) else ONE
        db = b[-i] if i <= len(b) else ONE
        da, db = simplify(da), simplify(db)
        if da == db:
            out.append(da)
        elif da == ONE:
            out.append(db)
        elif db == ONE:
            out.append(da)
        else:
            raise TypecheckError(
                f"{ctx}: cannot broadcast {_shape_str(a)} with {_shape_str(b)}"
            )
    return tuple(reversed(out))


def _shape_str(s: Shape) -> str:
    return "(" + ", ".join(_se.render(e) for e in s) + ")"


def typecheck(spec: KernelSpec) -> CheckedSpec:
    arrangement = build_arrangement(spec)
    grid = _arrange.validate(arrangement)
    maps = {m.param: m for m in _arrange.lower(arrangement, grid)}
    tensors = dict(arrangement)
    tile_shapes: dict[str, Shape] = {}
    nest_counts: dict[str, int] = {}
    for name, tensor in arrangement:
        tile_shapes[name] = tuple(simplify(s) for s in tensor.levels[-1].shape)
        nest_counts[name] = len(maps[name].nest_sizes)
    for p in spec.params:
        if p.rank == 0:
            tile_shapes[p.name] = ()
            nest_counts[p.name] = 0

    expr_shapes: dict[int, Shape] = {}
    locals_shape: dict[str, Shape] = {}
    loop_vars: set[str] = set()
    stored: dict[str, int] = {p.name: 0 for p in spec.params if p.role == "out"}

    def check_scalar(e: ScalarExpr, ctx: str):
        if isinstance(e, Var):
            if e.name not in loop_vars:
                raise TypecheckError(f"{ctx}: unknown index variable {e.name!r}")
        elif not isinstance(e, IConst):
            raise TypecheckError(f"{ctx}: nest index must be a loop variable or constant")

    def shape_of(e: TileExpr) -> Shape:
        s = _shape_of(e)
        expr_shapes[id(e)] = s
        return s

    def _shape_of(e: TileExpr) -> Shape:
        if isinstance(e, Load):
            p = spec.param(e.param)
            want = nest_counts[e.param]
            if len(e.nests) != want:
                raise TypecheckError(
                    f"load of {e.param!r} takes {want} nest indices, got {len(e.nests)}"
                )
            for n in e.nests:
                check_scalar(n, f"load of {e.param!r}")
            return tile_shapes[e.param]
        if isinstance(e, Local):
            if e.name not in locals_shape:
                raise TypecheckError(f"use of unbound local {e.name!r}")
            return locals_shape[e.name]
        if isinstance(e, ConstF):
            return ()
        if isinstance(e, BinOp):
            if e.op not in BIN_OPS:
                raise TypecheckError(f"unknown binary op {e.op!r}")
            return _broadcast(shape_of(e.a), shape_of(e.b), f"binary {e.op!r}")
        if isinstance(e, UnOp):
            if e.op not in UN_OPS:
                raise TypecheckError(f"unknown unary op {e.op!r}")
            return shape_of(e.a)
        if isinstance(e, Dot):
            sa, sb = shape_of(e.a), shape_of(e.b)
            if len(sa) != 2 or len(sb) != 2:
                raise TypecheckError("dot operands must be 2-D tiles")
            if simplify(sa[1]) != simplify(sb[0]):
                raise TypecheckError(
                    f"dot inner extents differ: {_shape_str(sa)} vs {_shape_str(sb)}"
                )
            return (sa[0], sb[1])
        if isinstance(e, Zeros):
            if e.kind not in SCALAR_KINDS:
                raise TypecheckError(f"zeros of unknown kind {e.kind!r}")
            return tuple(simplify(s) for s in e.shape)
        if isinstance(e, Reduce):
            if e.op not in REDUCE_OPS:
                raise TypecheckError(f"unknown reduce op {e.op!r}")
            s = shape_of(e.a)
            if not 0 <= e.axis < len(s):
                raise TypecheckError(f"reduce axis {e.axis} out of range for {_shape_str(s)}")
            return s[: e.axis] + s[e.axis + 1 :]
        if isinstance(e, ShapeOf):
            spec.param(e.param)
            if e.of == "nest":
                if not 0 <= e.dim < nest_counts[e.param]:
                    raise TypecheckError(
                        f"shape-of nest dim {e.dim} out of range for {e.param!r}"
                    )
            elif e.of == "source":
                if not 0 <= e.dim < spec.param(e.param).rank:
                    raise TypecheckError(
                        f"shape-of source dim {e.dim} out of range for {e.param!r}"
                    )
            else:
                raise TypecheckError(f"unknown shape-of kind {e.of!r}")
            return ()
        raise TypecheckError(f"unknown expression node {type(e).__name__}")

    def check_stmt(s: TileStmt, top_level: bool):
        if isinstance(s, Let):
            if s.name in locals_shape:
                raise TypecheckError(f"local {s.name!r} bound twice")
            locals_shape[s.name] = shape_of(s.expr)
        elif isinstance(s, Accumulate):
            if s.name not in locals_shape:
                raise TypecheckError(f"accumulate into unbound local {s.name!r}")
            have = locals_shape[s.name]
            got = _broadcast(have, shape_of(s.expr), f"accumulate into {s.name!r}")
            if got != have:
                raise TypecheckError(
                    f"accumulate into {s.name!r} would grow its shape "
                    f"{_shape_str(have)} -> {_shape_str(got)}"
                )
        elif isinstance(s, Store):
            p = spec.param(s.param)
            if p.role != "out":
                raise TypecheckError(f"store into input parameter {s.param!r}")
            if not top_level:
                raise TypecheckError(f"store into {s.param!r} inside a loop")
            val = shape_of(s.expr)
            want = tile_shapes[s.param]
            if _broadcast(val, want, f"store into {s.param!r}") != tuple(
                simplify(x) for x in want
            ):
                raise TypecheckError(
                    f"store into {s.param!r}: value {_shape_str(val)} does not fit "
                    f"tile {_shape_str(want)}"
                )
            stored[s.param] += 1
        elif isinstance(s, ForRange):
            if isinstance(s.extent, ShapeOf):
                shape_of(s.extent)
            elif not isinstance(s.extent, SymExpr):
                raise TypecheckError("loop extent must be a shape query or expression")
            if s.var in loop_vars or s.var in locals_shape:
                raise TypecheckError(f"loop variable {s.var!r} shadows an existing name")
            loop_vars.add(s.var)
            for inner in s.body:
                check_stmt(inner, top_level=False)
            loop_vars.discard(s.var)
        else:
            raise TypecheckError(f"unknown statement node {type(s).__name__}")

    for s in spec.application:
        check_stmt(s, top_level=True)
    for name, count in stored.items():
        if count != 1:
            raise TypecheckError(
                f"output parameter {name!r} must be stored exactly once, got {count}"
            )

    return CheckedSpec(
        spec=spec,
        arrangement=tuple(arrangement),
        grid=grid,
        index_maps=maps,
        tile_shapes=tile_shapes,
        expr_shapes=expr_shapes,
    )


# --- JSON serialization ---------------------------------------------------

def _shape_entry_to_json(x):
    if isinstance(x, int):
        return x
    return _se.to_json(x)


def _shape_entry_from_json(obj, path):
    if isinstance(obj, int):
        if obj != -1:
            raise SpecParseError(f"{path}: integer shape entries must be -1")
        return -1
    if isinstance(obj, list):
        return _se.from_json(obj)
    raise SpecParseError(f"{path}: expected -1 or an expression")


def _op_to_json(op: ArrangeOp):
    out = {"op": op.op}
    if op.depth:
        out["depth"] = op.depth
    if op.op == "tile":
        out["shape"] = [_shape_entry_to_json(x) for x in op.shape]
        out["strides"] = (
            None if op.strides is None else [_shape_entry_to_json(x) for x in op.strides]
        )
    elif op.op == "expand":
        out["shape"] = [_shape_entry_to_json(x) for x in op.shape]
    elif op.op == "squeeze":
        out["dim"] = op.dim
    elif op.op == "permute":
        out["order"] = list(op.order)
    elif op.op == "flatten":
        out["start"] = op.start
        out["end"] = op.end
    return out


def _op_from_json(obj, path) -> ArrangeOp:
    if not isinstance(obj, dict) or "op" not in obj:
        raise SpecParseError(f"{path}: expected an arrangement op object")
    name = obj["op"]
    depth = obj.get("depth", 0)
    if name == "tile":
        strides = obj.get("strides")
        return ArrangeOp(
            "tile",
            depth=depth,
            shape=tuple(
                _shape_entry_from_json(x, f"{path}.shape[{i}]")
                for i, x in enumerate(obj["shape"])
            ),
            strides=None
            if strides is None
            else tuple(
                _shape_entry_from_json(x, f"{path}.strides[{i}]")
                for i, x in enumerate(strides)
            ),
        )
    if name == "expand":
        return ArrangeOp(
            "expand",
            depth=depth,
            shape=tuple(
                _shape_entry_from_json(x, f"{path}.shape[{i}]")
                for i, x in enumerate(obj["shape"])
            ),
        )
    if name == "squeeze":
        return ArrangeOp("squeeze", depth=depth, dim=int(obj["dim"]))
    if name == "permute":
        return ArrangeOp("permute", depth=depth, order=tuple(int(i) for i in obj["order"]))
    if name == "flatten":
        return ArrangeOp("flatten", depth=depth, start=int(obj["start"]), end=obj["end"])
    if name == "ravel":
        return ArrangeOp("ravel", depth=depth)
    raise SpecParseError(f"{path}: unknown arrangement op {name!r}")


def _scalar_to_json(e: ScalarExpr):
    if isinstance(e, Var):
        return {"t": "var", "name": e.name}
    return {"t": "iconst", "value": e.value}


def _scalar_from_json(obj, path) -> ScalarExpr:
    tag = obj.get("t") if isinstance(obj, dict) else None
    if tag == "var":
        return Var(obj["name"])
    if tag == "iconst":
        return IConst(int(obj["value"]))
    raise SpecParseError(f"{path}: expected an index variable or integer constant")


def _fill_to_json(x: float):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def _fill_from_json(obj, path) -> float:
    if obj is None:
        return 0.0
    if obj == "-inf":
        return float("-inf")
    if obj == "inf":
        return float("inf")
    if isinstance(obj, (int, float)):
        return float(obj)
    raise SpecParseError(f"{path}: bad fill value {obj!r}")


def _expr_to_json(e: TileExpr):
    if isinstance(e, Load):
        return {
            "t": "load",
            "param": e.param,
            "nests": [_scalar_to_json(n) for n in e.nests],
            "other": _fill_to_json(e.other),
        }
    if isinstance(e, Local):
        return {"t": "local", "name": e.name}
    if isinstance(e, ConstF):
        return {"t": "const", "value": e.value}
    if isinstance(e, BinOp):
        return {"t": "bin", "op": e.op, "a": _expr_to_json(e.a), "b": _expr_to_json(e.b)}
    if isinstance(e, UnOp):
        return {"t": "un", "op": e.op, "a": _expr_to_json(e.a)}
    if isinstance(e, Dot):
        return {"t": "dot", "a": _expr_to_json(e.a), "b": _expr_to_json(e.b)}
    if isinstance(e, Zeros):
        return {"t": "zeros", "shape": [_se.to_json(s) for s in e.shape], "kind": e.kind}
    if isinstance(e, Reduce):
        return {"t": "reduce", "op": e.op, "axis": e.axis, "a": _expr_to_json(e.a)}
    if isinstance(e, ShapeOf):
        return {"t": "shape", "param": e.param, "dim": e.dim, "of": e.of}
    raise SpecError(f"cannot serialize expression {type(e).__name__}")


def _expr_from_json(obj, path) -> TileExpr:
    if not isinstance(obj, dict) or "t" not in obj:
        raise SpecParseError(f"{path}: expected an expression object")
    tag = obj["t"]
    try:
        if tag == "load":
            return Load(
                param=obj["param"],
                nests=tuple(
                    _scalar_from_json(n, f"{path}.nests[{i}]")
                    for i, n in enumerate(obj.get("nests", []))
                ),
                other=_fill_from_json(obj.get("other"), f"{path}.other"),
            )
        if tag == "local":
            return Local(obj["name"])
        if tag == "const":
            return ConstF(float(obj["value"]))
        if tag == "bin":
            return BinOp(
                obj["op"],
                _expr_from_json(obj["a"], f"{path}.a"),
                _expr_from_json(obj["b"], f"{path}.b"),
            )
        if tag == "un":
            return UnOp(obj["op"], _expr_from_json(obj["a"], f"{path}.a"))
        if tag == "dot":
            return Dot(
                _expr_from_json(obj["a"], f"{path}.a"),
                _expr_from_json(obj["b"], f"{path}.b"),
            )
        if tag == "zeros":
            return Zeros(
                shape=tuple(_se.from_json(s) for s in obj["shape"]),
                kind=obj.get("kind", "f32"),
            )
        if tag == "reduce":
            return Reduce(obj["op"], int(obj["axis"]), _expr_from_json(obj["a"], f"{path}.a"))
        if tag == "shape":
            return ShapeOf(obj["param"], int(obj["dim"]), obj.get("of", "nest"))
    except KeyError as exc:
        raise SpecParseError(f"{path}: missing key {exc}") from None
    raise SpecParseError(f"{path}: unknown expression tag {tag!r}")


def _stmt_to_json(s: TileStmt):
    if isinstance(s, Let):
        return {"t": "let", "name": s.name, "expr": _expr_to_json(s.expr)}
    if isinstance(s, Accumulate):
        return {"t": "acc", "name": s.name, "expr": _expr_to_json(s.expr)}
    if isinstance(s, Store):
        return {"t": "store", "param": s.param, "expr": _expr_to_json(s.expr)}
    if isinstance(s, ForRange):
        extent = (
            _expr_to_json(s.extent)
            if isinstance(s.extent, ShapeOf)
            else {"t": "sym", "expr": _se.to_json(s.extent)}
        )
        return {
            "t": "for",
            "var": s.var,
            "extent": extent,
            "body": [_stmt_to_json(b) for b in s.body],
        }
    raise SpecError(f"cannot serialize statement {type(s).__name__}")


def _stmt_from_json(obj, path) -> TileStmt:
    if not isinstance(obj, dict) or "t" not in obj:
        raise SpecParseError(f"{path}: expected a statement object")
    tag = obj["t"]
    try:
        if tag == "let":
            return Let(obj["name"], _expr_from_json(obj["expr"], f"{path}.expr"))
        if tag == "acc":
            return Accumulate(obj["name"], _expr_from_json(obj["expr"], f"{path}.expr"))
        if tag == "store":
            return Store(obj["param"], _expr_from_json(obj["expr"], f"{path}.expr"))
        if tag == "for":
            ext = obj["extent"]
            if isinstance(ext, dict) and ext.get("t") == "sym":
                extent = _se.from_json(ext["expr"])
            else:
                extent = _expr_from_json(ext, f"{path}.extent")
                if not isinstance(extent, ShapeOf):
                    raise SpecParseError(f"{path}.extent: must be a shape query or expression")
            return ForRange(
                var=obj["var"],
                extent=extent,
                body=tuple(
                    _stmt_from_json(b, f"{path}.body[{i}]")
                    for i, b in enumerate(obj["body"])
                ),
            )
    except KeyError as exc:
        raise SpecParseError(f"{path}: missing key {exc}") from None
    raise SpecParseError(f"{path}: unknown statement tag {tag!r}")


def spec_to_dict(spec: KernelSpec) -> dict:
    return {
        "name": spec.name,
        "params": [
            {"name": p.name, "rank": p.rank, "kind": p.kind, "role": p.role}
            for p in spec.params
        ],
        "meta": list(spec.meta),
        "shape_constexpr": spec.shape_constexpr,
        "arrangement": {
            p.name: [_op_to_json(op) for op in spec.arrangement[p.name]]
            for p in spec.params
            if p.rank >= 1
        },
        "application": [_stmt_to_json(s) for s in spec.application],
    }


def serialize_spec(spec: KernelSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def spec_from_dict(obj: dict) -> KernelSpec:
    if not isinstance(obj, dict):
        raise SpecParseError("$: expected a JSON object")
    for key in ("name", "params", "arrangement", "application"):
        if key not in obj:
            raise SpecParseError(f"$: missing key {key!r}")
    params = []
    for i, p in enumerate(obj["params"]):
        try:
            params.append(ParamSpec(p["name"], int(p["rank"]), p["kind"], p["role"]))
        except (KeyError, TypeError) as exc:
            raise SpecParseError(f"$.params[{i}]: {exc}") from None
    arrangement = {}
    for name, ops in obj["arrangement"].items():
        arrangement[name] = tuple(
            _op_from_json(op, f"$.arrangement.{name}[{i}]") for i, op in enumerate(ops)
        )
    application = tuple(
        _stmt_from_json(s, f"$.application[{i}]") for i, s in enumerate(obj["application"])
    )
    try:
        return KernelSpec(
            name=obj["name"],
            params=tuple(params),
            meta=tuple(obj.get("meta", ())),
            arrangement=arrangement,
            application=application,
            shape_constexpr=bool(obj.get("shape_constexpr", False)),
        )
    except SpecError as exc:
        raise SpecParseError(f"$: {exc}") from None


def parse_spec(text: str) -> KernelSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return spec_from_dict(obj)
