"""CPU simulator: executes a checked kernel over concrete numpy buffers.

The per-program semantics match the emitted Triton source: each program gets
a linear pid, decomposes it row-major, evaluates every parameter's offset and
mask expressions over its lane index arrays, performs masked gather loads and
masked scatter stores, and runs the application statements with float32 tile
arithmetic (dot products accumulate in float64 before rounding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .symexpr import EvalError, RenderStyle, SymExpr, evaluate, render, substitute, wrap
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
    Store,
    UnOp,
    Var,
    Zeros,
)


class LaunchError(Exception):
    """Bad launch configuration: missing/ill-shaped arguments or failed
    launch-time checks."""


class SimInternalError(Exception):
    """Invariant violation inside the simulator (e.g. an unmasked index left
    the underlying buffer); never a user input error."""


@dataclass
class ConcreteTensor:
    """A flat float32 buffer plus the sizes/strides view the kernel sees."""

    buffer: np.ndarray
    shape: tuple[int, ...]
    strides: tuple[int, ...]  # in elements, not bytes

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ConcreteTensor":
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        strides = []
        acc = 1
        for s in reversed(arr.shape):
            strides.append(acc)
            acc *= s
        return cls(
            buffer=arr.reshape(-1).copy(),
            shape=tuple(arr.shape),
            strides=tuple(reversed(strides)),
        )

    @classmethod
    def scalar(cls, value: float) -> "ConcreteTensor":
        return cls(buffer=np.array([value], dtype=np.float32), shape=(), strides=())

    def to_array(self) -> np.ndarray:
        if not self.shape:
            return self.buffer[0].copy()
        idx = np.zeros(self.shape, dtype=np.int64)
        for d, (size, stride) in enumerate(zip(self.shape, self.strides)):
            ix = np.arange(size, dtype=np.int64).reshape(
                [1] * d + [size] + [1] * (len(self.shape) - d - 1)
            )
            idx = idx + ix * stride
        return self.buffer[idx]


_NP_STYLE = RenderStyle(cdiv="_cdiv", min_="_np.minimum", max_="_np.maximum")


def _np_cdiv(a, b):
    return -((-a) // b)


def _compile(expr: SymExpr, argnames: Sequence[str]):
    body = render(expr, _NP_STYLE)
    code = "lambda {}: ({})".format(", ".join(argnames) or "*_ignored", body)
    return eval(code, {"_cdiv": _np_cdiv, "_np": np})


@dataclass
class _ParamPlan:
    tensor: ConcreteTensor
    tile_shape: tuple[int, ...]
    lane_arrays: tuple[np.ndarray, ...]
    nest_sizes: tuple[int, ...]
    offset_fn: object = None
    mask_fns: tuple = ()
    bound_vals: tuple[int, ...] = ()


@dataclass
class LaunchResult:
    grid: tuple[int, ...]
    total: int
    # Only populated when collect_writes=True: per out-param, per program,
    # the sorted flat offsets that program actually wrote.
    writes: Optional[dict[str, list[np.ndarray]]] = None


def binding_for(
    checked: CheckedSpec,
    args: Mapping[str, ConcreteTensor],
    meta: Mapping[str, int],
) -> dict[str, int]:
    """Numeric binding for every size/stride/meta symbol; validates args."""
    spec = checked.spec
    binding: dict[str, int] = {}
    for name in spec.meta:
        if name not in meta:
            raise LaunchError(f"missing meta-parameter {name!r}")
        v = int(meta[name])
        if v < 1:
            raise LaunchError(f"meta-parameter {name!r} must be positive, got {v}")
        binding[name] = v
    for extra in set(meta) - set(spec.meta):
        raise LaunchError(f"unexpected meta-parameter {extra!r}")
    for p in spec.params:
        if p.name not in args:
            raise LaunchError(f"missing argument {p.name!r}")
        t = args[p.name]
        if len(t.shape) != p.rank:
            raise LaunchError(
                f"argument {p.name!r} has rank {len(t.shape)}, expected {p.rank}"
            )
        for i, (size, stride) in enumerate(zip(t.shape, t.strides)):
            binding[f"{p.name}_size_{i}"] = int(size)
            binding[f"{p.name}_stride_{i}"] = int(stride)
    for extra in set(args) - {p.name for p in spec.params}:
        raise LaunchError(f"unexpected argument {extra!r}")
    return binding


def _run_checks(checked: CheckedSpec, binding: Mapping[str, int]) -> None:
    for lhs, rhs in checked.grid.checks:
        lv, rv = evaluate(lhs, binding), evaluate(rhs, binding)
        if lv != rv:
            raise LaunchError(
                f"launch-time check failed: {render(lhs)} = {lv} "
                f"but {render(rhs)} = {rv}"
            )


def launch(
    checked: CheckedSpec,
    args: Mapping[str, ConcreteTensor],
    meta: Mapping[str, int],
    *,
    pid_order: str = "forward",
    collect_writes: bool = False,
) -> LaunchResult:
    """Run every program of the grid, mutating out-parameter buffers."""
    spec = checked.spec
    binding = binding_for(checked, args, meta)
    try:
        _run_checks(checked, binding)
        grid_sizes = tuple(int(evaluate(s, binding)) for s in checked.grid.sizes)
    except EvalError as exc:
        raise LaunchError(str(exc)) from None
    total = 1
    for g in grid_sizes:
        if g < 1:
            raise LaunchError(f"grid dimension evaluated to {g}")
        total *= g

    plans: dict[str, _ParamPlan] = {}
    for p in spec.params:
        imap = checked.index_maps.get(p.name)
        if imap is None:  # rank-0 scalar
            plans[p.name] = _ParamPlan(args[p.name], (), (), ())
            continue
        lane_sizes = tuple(int(evaluate(s, binding)) for s in imap.lane_sizes)
        nest_sizes = tuple(int(evaluate(s, binding)) for s in imap.nest_sizes)
        if any(s < 1 for s in lane_sizes):
            raise LaunchError(f"{p.name!r}: lane extent evaluated below 1")
        rank = len(lane_sizes)
        lanes = tuple(
            np.arange(lane_sizes[j], dtype=np.int64).reshape(
                [1] * j + [lane_sizes[j]] + [1] * (rank - j - 1)
            )
            for j in range(rank)
        )
        argnames = (
            [f"pid_{i}" for i in range(len(grid_sizes))]
            + [f"nest_{k}" for k in range(len(nest_sizes))]
            + [f"lane_{j}" for j in range(rank)]
        )
        env = {k: wrap(v) for k, v in binding.items()}
        offset = substitute(imap.offset, env)
        offset_fn = _compile(offset, argnames)
        mask_fns = tuple(
            (_compile(substitute(lhs, env), argnames), int(evaluate(rhs, binding)))
            for lhs, rhs in imap.mask
        )
        plans[p.name] = _ParamPlan(
            tensor=args[p.name],
            tile_shape=lane_sizes,
            lane_arrays=lanes,
            nest_sizes=nest_sizes,
            offset_fn=offset_fn,
            mask_fns=mask_fns,
        )

    writes: Optional[dict[str, list[np.ndarray]]] = None
    if collect_writes:
        writes = {p.name: [] for p in spec.params if p.role == "out"}

    pids = range(total)
    if pid_order == "reverse":
        pids = range(total - 1, -1, -1)
    elif pid_order != "forward":
        raise LaunchError(f"unknown pid order {pid_order!r}")

    for pid in pids:
        pid_vals = _decompose_int(pid, grid_sizes)
        _run_program(checked, plans, binding, pid_vals, writes)
    return LaunchResult(grid=grid_sizes, total=total, writes=writes)


def _decompose_int(pid: int, sizes: tuple[int, ...]) -> tuple[int, ...]:
    out = []
    rest = pid
    for s in reversed(sizes):
        out.append(rest % s)
        rest //= s
    out[-1] = pid // math.prod(sizes[1:]) if len(sizes) > 1 else pid
    return tuple(reversed(out))


def _offsets_and_mask(plan: _ParamPlan, pid_vals, nest_vals):
    call = tuple(pid_vals) + tuple(nest_vals) + plan.lane_arrays
    offs = np.broadcast_to(np.asarray(plan.offset_fn(*call)), plan.tile_shape)
    if plan.mask_fns:
        mask = np.ones(plan.tile_shape, dtype=bool)
        for fn, bound in plan.mask_fns:
            lhs = np.broadcast_to(np.asarray(fn(*call)), plan.tile_shape)
            mask = mask & (lhs >= 0) & (lhs < bound)
    else:
        mask = np.ones(plan.tile_shape, dtype=bool)
    active = offs[mask]
    if active.size and (active.min() < 0 or active.max() >= plan.tensor.buffer.size):
        raise SimInternalError(
            "in-mask offset escaped the underlying buffer "
            f"(range [{active.min()}, {active.max()}], "
            f"buffer size {plan.tensor.buffer.size})"
        )
    return offs, mask


def _run_program(checked, plans, binding, pid_vals, writes) -> None:
    spec = checked.spec
    env: dict[str, np.ndarray] = {}
    nest_env: dict[str, int] = {}

    def scalar_idx(e) -> int:
        if isinstance(e, Var):
            return nest_env[e.name]
        if isinstance(e, IConst):
            return e.value
        raise SimInternalError(f"bad nest index node {type(e).__name__}")

    def ev(e) -> np.ndarray:
        if isinstance(e, Load):
            plan = plans[e.param]
            if not plan.tile_shape and not plan.lane_arrays and plan.offset_fn is None:
                return plan.tensor.buffer[0]
            nest_vals = [scalar_idx(n) for n in e.nests]
            offs, mask = _offsets_and_mask(plan, pid_vals, nest_vals)
            out = np.full(plan.tile_shape, np.float32(e.other), dtype=np.float32)
            out[mask] = plan.tensor.buffer[offs[mask]]
            return out
        if isinstance(e, Local):
            return env[e.name]
        if isinstance(e, ConstF):
            return np.float32(e.value)
        if isinstance(e, BinOp):
            a, b = ev(e.a), ev(e.b)
            if e.op == "+":
                return (a + b).astype(np.float32, copy=False)
            if e.op == "-":
                return (a - b).astype(np.float32, copy=False)
            if e.op == "*":
                return (a * b).astype(np.float32, copy=False)
            if e.op == "/":
                return (a / b).astype(np.float32, copy=False)
            raise SimInternalError(f"bad binary op {e.op!r}")
        if isinstance(e, UnOp):
            a = ev(e.a)
            if e.op == "exp":
                return np.exp(a, dtype=np.float32)
            if e.op == "sqrt":
                return np.sqrt(a, dtype=np.float32)
            if e.op == "neg":
                return (-a).astype(np.float32, copy=False)
            if e.op == "sigmoid":
                return (1.0 / (1.0 + np.exp(-a.astype(np.float64)))).astype(np.float32)
            raise SimInternalError(f"bad unary op {e.op!r}")
        if isinstance(e, Dot):
            a = ev(e.a).astype(np.float64)
            b = ev(e.b).astype(np.float64)
            return (a @ b).astype(np.float32)
        if isinstance(e, Zeros):
            shape = tuple(int(evaluate(s, binding)) for s in e.shape)
            return np.zeros(shape, dtype=np.float32)
        if isinstance(e, Reduce):
            a = ev(e.a)
            if e.op == "sum":
                return np.sum(a, axis=e.axis, dtype=np.float32)
            return np.max(a, axis=e.axis)
        if isinstance(e, ShapeOf):
            plan = plans[e.param]
            if e.of == "nest":
                return plan.nest_sizes[e.dim]
            return binding[f"{e.param}_size_{e.dim}"]
        raise SimInternalError(f"bad expression node {type(e).__name__}")

    def run(stmts) -> None:
        for s in stmts:
            if isinstance(s, Let):
                env[s.name] = ev(s.expr)
            elif isinstance(s, Accumulate):
                env[s.name] = (env[s.name] + ev(s.expr)).astype(np.float32, copy=False)
            elif isinstance(s, Store):
                plan = plans[s.param]
                val = np.broadcast_to(
                    np.asarray(ev(s.expr), dtype=np.float32), plan.tile_shape
                )
                offs, mask = _offsets_and_mask(plan, pid_vals, ())
                plan.tensor.buffer[offs[mask]] = val[mask]
                if writes is not None:
                    writes[s.param].append(np.sort(offs[mask].ravel()))
            elif isinstance(s, ForRange):
                if isinstance(s.extent, ShapeOf):
                    extent = int(ev(s.extent))
                else:
                    extent = int(evaluate(s.extent, binding))
                for v in range(extent):
                    nest_env[s.var] = v
                    run(s.body)
                nest_env.pop(s.var, None)
            else:
                raise SimInternalError(f"bad statement node {type(s).__name__}")

    run(spec.application)


def check_write_partition(
    checked: CheckedSpec,
    args: Mapping[str, ConcreteTensor],
    meta: Mapping[str, int],
) -> None:
    """Assert that, per out-parameter, program writes are pairwise disjoint
    and jointly cover every element of the argument exactly once."""
    result = launch(checked, args, meta, collect_writes=True)
    assert result.writes is not None
    for p in checked.spec.params:
        if p.role != "out":
            continue
        per_program = result.writes[p.name]
        all_offsets = (
            np.concatenate(per_program) if per_program else np.empty(0, dtype=np.int64)
        )
        if len(np.unique(all_offsets)) != all_offsets.size:
            raise SimInternalError(
                f"programs overlap when writing {p.name!r}(size {all_offsets.size})"
            )
        tensor = args[p.name]
        expected = np.sort(tensor_covered_offsets(tensor))
        got = np.sort(all_offsets)
        if got.size != expected.size or not np.array_equal(got, expected):
            raise SimInternalError(
                f"writes to {p.name!r} do not cover it exactly: wrote {got.size} "
                f"of {expected.size} elements"
            )


def tensor_covered_offsets(tensor: ConcreteTensor) -> np.ndarray:
    """Flat offsets of every logical element of a tensor view."""
    if not tensor.shape:
        return np.zeros(1, dtype=np.int64)
    idx = np.zeros(tensor.shape, dtype=np.int64)
    for d, (size, stride) in enumerate(zip(tensor.shape, tensor.strides)):
        ix = np.arange(size, dtype=np.int64).reshape(
            [1] * d + [size] + [1] * (len(tensor.shape) - d - 1)
        )
        idx = idx + ix * stride
    return idx.reshape(-1)
