"""Triton source emitter.

Consumes the exact offset/mask expressions produced by lowering (the same
ones the simulator runs), so no addressing is ever re-derived here.  Output
is a self-contained source file with one @triton.jit kernel plus a launcher
that pulls sizes/strides off the runtime tensors, asserts the recorded
launch-time checks, and launches a 1-D grid that the kernel decomposes
row-major in-body.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .symexpr import RenderStyle, SymExpr, free_symbols, render, substitute, sym
from .tileir import (
    Accumulate,
    BinOp,
    CheckedSpec,
    ConstF,
    Dot,
    ForRange,
    IConst,
    Let,
    Load,
    Local,
    Reduce,
    ShapeOf,
    SpecError,
    Store,
    UnOp,
    Var,
    Zeros,
)

_TL = RenderStyle(cdiv="tl.cdiv", min_="tl.minimum", max_="tl.maximum")
_PY = RenderStyle(cdiv="_cdiv", min_="min", max_="max")


class EmitError(SpecError):
    pass


@dataclass(frozen=True)
class EmittedKernel:
    source: str
    kernel_name: str
    launcher_name: str
    manifest: dict


def _float_lit(x: float) -> str:
    if math.isinf(x):
        return 'float("-inf")' if x < 0 else 'float("inf")'
    return repr(float(x))


class _Lines:
    def __init__(self):
        self.parts: list[str] = []
        self.indent = 0

    def add(self, text: str = ""):
        self.parts.append("    " * self.indent + text if text else "")

    def text(self) -> str:
        return "\n".join(self.parts) + "\n"


def emit_triton(checked: CheckedSpec) -> EmittedKernel:
    spec = checked.spec
    kernel_name = f"{spec.name}_kernel"
    launcher_name = f"{spec.name}_launch"

    tensor_params = [p for p in spec.params if p.rank >= 1]
    scalar_params = [p for p in spec.params if p.rank == 0]

    # Kernel argument order: pointers and runtime scalars (param order),
    # per-parameter sizes then strides (param order), constexpr meta last.
    kernel_args: list[dict] = []
    for p in spec.params:
        if p.rank == 0:
            kernel_args.append({"name": p.name, "kind": "scalar", "param": p.name})
        else:
            kernel_args.append({"name": f"ptr_{p.name}", "kind": "pointer", "param": p.name})
    for p in tensor_params:
        for i in range(p.rank):
            kernel_args.append(
                {"name": f"{p.name}_size_{i}", "kind": "size", "param": p.name, "dim": i}
            )
        for i in range(p.rank):
            kernel_args.append(
                {"name": f"{p.name}_stride_{i}", "kind": "stride", "param": p.name, "dim": i}
            )
    for m in spec.meta:
        kernel_args.append({"name": m, "kind": "meta"})

    grid_sizes = checked.grid.sizes
    pid_exprs = checked.grid.pid_components(sym("pid"))

    # Per-parameter lane substitution: the generic lane_j symbols of each
    # index map become parameter-scoped kernel variables.
    lane_subs = {
        name: {
            f"lane_{j}": sym(f"{name}_lane_{j}")
            for j in range(len(imap.lane_sizes))
        }
        for name, imap in checked.index_maps.items()
    }

    # --- free-variable soundness scan (on the IR, pre-rendering) ----------
    arg_names = {a["name"] for a in kernel_args}
    defined = set(arg_names)
    defined.add("pid")
    defined.update(f"pid_{i}" for i in range(len(grid_sizes)))
    for name, imap in checked.index_maps.items():
        defined.update(f"{name}_lane_{j}" for j in range(len(imap.lane_sizes)))
    loop_vars = _collect_loop_vars(spec.application)
    defined.update(loop_vars)

    def scan(expr: SymExpr, ctx: str):
        missing = free_symbols(expr) - defined
        if missing:
            raise EmitError(f"{ctx}: symbols {sorted(missing)} are neither kernel "
                            "arguments nor defined in the kernel body")

    for i, e in enumerate(pid_exprs):
        scan(e, f"pid component {i}")
    for name, imap in checked.index_maps.items():
        offs = substitute(imap.offset, lane_subs[name])
        scan(substitute(offs, {f"nest_{k}": sym("pid") for k in range(len(imap.nest_sizes))}),
             f"{name} offset")
        for lhs, bound in imap.mask:
            scan(substitute(substitute(lhs, lane_subs[name]),
                            {f"nest_{k}": sym("pid") for k in range(len(imap.nest_sizes))}),
                 f"{name} mask")
            scan(bound, f"{name} mask bound")
    for lhs, rhs in checked.grid.checks:
        scan(lhs, "launch check")
        scan(rhs, "launch check")

    # --- kernel body -------------------------------------------------------
    out = _Lines()
    out.add('"""Generated Triton kernel; edit the source spec, not this file."""')
    out.add()
    out.add("import torch")
    out.add("import triton")
    out.add("import triton.language as tl")
    out.add()
    out.add()
    out.add("def _cdiv(a, b):")
    out.add("    return -(-a // b)")
    out.add()
    out.add()
    out.add("@triton.jit")
    out.add(f"def {kernel_name}(")
    for a in kernel_args:
        suffix = ": tl.constexpr" if a["kind"] == "meta" else ""
        out.add(f"    {a['name']}{suffix},")
    out.add("):")
    out.indent = 1
    out.add("pid = tl.program_id(0)")
    for i, e in enumerate(pid_exprs):
        out.add(f"pid_{i} = {render(e, _TL)}")
    for name, imap in checked.index_maps.items():
        rank = len(imap.lane_sizes)
        for j, size in enumerate(imap.lane_sizes):
            subscript = ""
            if rank > 1:
                axes = ", ".join(":" if ax == j else "None" for ax in range(rank))
                subscript = f"[{axes}]"
            out.add(f"{name}_lane_{j} = tl.arange(0, {render(size, _TL)}){subscript}")

    def access(param: str, nests: tuple) -> tuple[str, str]:
        """Rendered (offset, mask) for one load/store site."""
        imap = checked.index_maps[param]
        env = dict(lane_subs[param])
        for k, n in enumerate(nests):
            if isinstance(n, Var):
                env[f"nest_{k}"] = sym(n.name)
            elif isinstance(n, IConst):
                env[f"nest_{k}"] = sym(str(n.value))  # renders as the literal
            else:
                raise EmitError(f"bad nest index node {type(n).__name__}")
        offset = render(substitute(imap.offset, env), _TL)
        terms = [
            f"({render(substitute(lhs, env), _TL)} < {render(bound, _TL)})"
            for lhs, bound in imap.mask
        ]
        return offset, " & ".join(terms)

    def ex(e) -> str:
        if isinstance(e, Load):
            p = spec.param(e.param)
            if p.rank == 0:
                return e.param
            offset, mask = access(e.param, e.nests)
            if mask:
                return (f"tl.load(ptr_{e.param} + ({offset}), mask={mask}, "
                        f"other={_float_lit(e.other)})")
            return f"tl.load(ptr_{e.param} + ({offset}))"
        if isinstance(e, Local):
            return e.name
        if isinstance(e, ConstF):
            return _float_lit(e.value)
        if isinstance(e, BinOp):
            return f"({ex(e.a)} {e.op} {ex(e.b)})"
        if isinstance(e, UnOp):
            if e.op == "neg":
                return f"(-{ex(e.a)})"
            fn = {"exp": "tl.exp", "sqrt": "tl.sqrt", "sigmoid": "tl.sigmoid"}[e.op]
            return f"{fn}({ex(e.a)})"
        if isinstance(e, Dot):
            return f"tl.dot({ex(e.a)}, {ex(e.b)})"
        if isinstance(e, Zeros):
            shape = ", ".join(render(s, _TL) for s in e.shape)
            trail = "," if len(e.shape) == 1 else ""
            return f"tl.zeros(({shape}{trail}), dtype=tl.float32)"
        if isinstance(e, Reduce):
            fn = "tl.sum" if e.op == "sum" else "tl.max"
            return f"{fn}({ex(e.a)}, {e.axis})"
        if isinstance(e, ShapeOf):
            return extent_str(e)
        raise EmitError(f"no Triton lowering for {type(e).__name__}")

    def extent_str(e: ShapeOf) -> str:
        if e.of == "source":
            return f"{e.param}_size_{e.dim}"
        return render(checked.index_maps[e.param].nest_sizes[e.dim], _TL)

    def stmt(s):
        if isinstance(s, Let):
            out.add(f"{s.name} = {ex(s.expr)}")
        elif isinstance(s, Accumulate):
            out.add(f"{s.name} = {s.name} + {ex(s.expr)}")
        elif isinstance(s, Store):
            p = spec.param(s.param)
            value = ex(s.expr)
            if p.kind == "f16":
                value = f"({value}).to(tl.float16)"
            offset, mask = access(s.param, ())
            if mask:
                out.add(f"tl.store(ptr_{s.param} + ({offset}), {value}, mask={mask})")
            else:
                out.add(f"tl.store(ptr_{s.param} + ({offset}), {value})")
        elif isinstance(s, ForRange):
            if isinstance(s.extent, ShapeOf):
                extent = extent_str(s.extent)
            else:
                extent = render(s.extent, _TL)
            out.add(f"for {s.var} in range({extent}):")
            out.indent += 1
            for b in s.body:
                stmt(b)
            out.indent -= 1
        else:
            raise EmitError(f"no Triton lowering for {type(s).__name__}")

    for s in spec.application:
        stmt(s)
    out.indent = 0
    out.add()
    out.add()

    # --- launcher ----------------------------------------------------------
    launcher_args = [p.name for p in spec.params] + list(spec.meta)
    out.add(f"def {launcher_name}({', '.join(launcher_args)}):")
    out.indent = 1
    for p in tensor_params:
        sizes = ", ".join(f"{p.name}_size_{i}" for i in range(p.rank))
        strides = ", ".join(f"{p.name}_stride_{i}" for i in range(p.rank))
        trail = "," if p.rank == 1 else ""
        out.add(f"{sizes}{trail} = {p.name}.shape")
        out.add(f"{strides}{trail} = {p.name}.stride()")
    for lhs, rhs in checked.grid.checks:
        ls, rs = render(lhs, _PY), render(rhs, _PY)
        out.add(f"assert {ls} == {rs}, "
                f"\"launch-time check failed: {ls} != {rs}\"")
    total = " * ".join(f"({render(s, _PY)})" for s in grid_sizes)
    out.add(f"grid_total = {total}")
    out.add(f"{kernel_name}[(grid_total,)](")
    for a in kernel_args:
        if a["kind"] == "pointer":
            out.add(f"    {a['param']},")
        elif a["kind"] == "meta":
            out.add(f"    {a['name']}={a['name']},")
        else:
            out.add(f"    {a['name']},")
    out.add(")")
    out_params = [p.name for p in spec.params if p.role == "out"]
    out.add(f"return {', '.join(out_params)}")
    out.indent = 0

    manifest = {
        "name": spec.name,
        "kernel": kernel_name,
        "launcher": launcher_name,
        "params": [
            {"name": p.name, "rank": p.rank, "kind": p.kind, "role": p.role}
            for p in spec.params
        ],
        "meta": list(spec.meta),
        "launcher_args": launcher_args,
        "kernel_args": kernel_args,
        "grid": [render(s, _PY) for s in grid_sizes],
    }
    return EmittedKernel(
        source=out.text(),
        kernel_name=kernel_name,
        launcher_name=launcher_name,
        manifest=manifest,
    )


def _collect_loop_vars(stmts) -> set[str]:
    found: set[str] = set()

    def walk(ss):
        for s in ss:
            if isinstance(s, ForRange):
                found.add(s.var)
                walk(s.body)

    walk(stmts)
    return found


def manifest_json(emitted: EmittedKernel) -> str:
    return json.dumps(emitted.manifest, indent=2) + "\n"
