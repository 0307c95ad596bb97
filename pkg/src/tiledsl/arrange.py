"""Serial-to-parallel core: arrangement validation, grid inference, and the
lowering of each parameter to an offset/mask index map.

Index variables: ``pid_i`` for level-0 dims, ``lane_j`` for the innermost
level's dims (the tile the application computes on), and ``nest_k`` for dims
of any levels in between (consumed by nested indexing like ``input[k]``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .htensor import Dim, GroupRef, HTensor, Leaf
from .symexpr import (
    ONE,
    ZERO,
    SymExpr,
    evaluate,
    simplify,
    sym,
)


class ArrangeError(Exception):
    pass


Arrangement = Sequence[tuple[str, HTensor]]


@dataclass(frozen=True)
class GridSpec:
    sizes: tuple[SymExpr, ...]
    total: SymExpr
    # Launch-time equality assertions: shape-consistency fallbacks plus any
    # checks recorded by the meta-operations themselves.
    checks: tuple[tuple[SymExpr, SymExpr], ...] = ()

    def pid_components(self, pid: SymExpr) -> tuple[SymExpr, ...]:
        """Row-major decomposition of a linear pid, last dim fastest."""
        comps = []
        for i, size in enumerate(self.sizes):
            stride = ONE
            for later in self.sizes[i + 1 :]:
                stride = stride * later
            piece = pid // stride if stride != ONE else pid
            if i > 0:
                piece = piece % size
            comps.append(simplify(piece))
        return tuple(comps)


@dataclass(frozen=True)
class IndexMap:
    param: str
    lane_sizes: tuple[SymExpr, ...]
    nest_sizes: tuple[SymExpr, ...]
    source_index: tuple[SymExpr, ...]
    offset: SymExpr
    # Conjunction of (lhs < bound) terms; an empty tuple means always true.
    mask: tuple[tuple[SymExpr, SymExpr], ...]


def validate(arrangement: Arrangement) -> GridSpec:
    if not arrangement:
        raise ArrangeError("arrangement has no parameters")
    shapes = []
    checks: list[tuple[SymExpr, SymExpr]] = []
    for name, tensor in arrangement:
        if len(tensor.levels) < 2:
            raise ArrangeError(f"parameter {name!r} has a single level after arrangement")
        shapes.append((name, tuple(simplify(s) for s in tensor.shape)))
        checks.extend(tensor.checks)
    first_name, first = shapes[0]
    for name, shape in shapes[1:]:
        if len(shape) != len(first):
            raise ArrangeError(
                f"outermost-level rank mismatch: {first_name} has {len(first)} dims, "
                f"{name} has {len(shape)}"
            )
        for a, b in zip(first, shape):
            if a == b:
                continue
            if a.kind == "const" and b.kind == "const":
                raise ArrangeError(
                    f"outermost-level shape mismatch between {first_name} and {name}: "
                    f"{[str(s.value) if s.kind == 'const' else '?' for s in first]} vs "
                    f"{[str(s.value) if s.kind == 'const' else '?' for s in shape]}"
                )
            # Not structurally equal; accept provisionally with a launch-time
            # numeric equality check.
            checks.append((a, b))
    total = first[0]
    for s in first[1:]:
        total = total * s
    deduped = []
    for c in checks:
        if c not in deduped and (c[1], c[0]) not in deduped:
            deduped.append(c)
    return GridSpec(sizes=first, total=simplify(total), checks=tuple(deduped))


def decompose_pid(grid: GridSpec, pid: int, binding: Mapping[str, int]) -> tuple[int, ...]:
    total = evaluate(grid.total, binding)
    if not 0 <= pid < total:
        raise ArrangeError(f"pid {pid} out of range for grid total {total}")
    return tuple(evaluate(c, {**binding, "pid": pid}) for c in grid.pid_components(sym("pid")))


def lower(arrangement: Arrangement, grid: GridSpec) -> list[IndexMap]:
    return [_lower_param(name, tensor) for name, tensor in arrangement]


def _decompose(index: SymExpr, sizes: Sequence[SymExpr]) -> list[SymExpr]:
    """Row-major mixed-radix pieces of ``index`` over ``sizes``.

    The leading piece keeps no modulo so that an out-of-range index overflows
    into it and gets caught by the per-source-dim bound check.
    """
    n = len(sizes)
    if n == 1:
        return [index]
    pieces = []
    for j in range(n):
        stride = ONE
        for later in sizes[j + 1 :]:
            stride = stride * later
        piece = index // stride
        if j > 0:
            piece = piece % sizes[j]
        pieces.append(simplify(piece))
    return pieces


def _lower_param(name: str, tensor: HTensor) -> IndexMap:
    levels = tensor.levels
    n = len(levels)
    bound: list[tuple[Dim, SymExpr]] = []
    for i, dim in enumerate(levels[0].dims):
        bound.append((dim, sym(f"pid_{i}")))
    nest_count = 0
    nest_sizes = []
    for lvl in levels[1 : n - 1]:
        for dim in lvl.dims:
            bound.append((dim, sym(f"nest_{nest_count}")))
            nest_sizes.append(dim.size)
            nest_count += 1
    lane_sizes = []
    for j, dim in enumerate(levels[n - 1].dims):
        bound.append((dim, sym(f"lane_{j}")))
        lane_sizes.append(dim.size)

    # Accumulate factor contributions into index groups, then resolve the
    # group DAG: a group's logical index must be complete before it is
    # decomposed, and decomposition may feed further groups downstream.
    groups: dict[int, object] = {}
    contrib: dict[int, SymExpr] = {}
    referrers: dict[int, set[int]] = {}

    def register(group):
        gid = id(group)
        if gid in groups:
            return
        groups[gid] = group
        contrib.setdefault(gid, ZERO)
        referrers.setdefault(gid, set())
        for slot in group.slots:
            if isinstance(slot.target, GroupRef):
                register(slot.target.group)
                referrers[id(slot.target.group)].add(gid)

    for dim, _ in bound:
        for f in dim.factors:
            register(f.group)

    for dim, var in bound:
        pieces = _decompose(var, [f.size for f in dim.factors])
        for f, piece in zip(dim.factors, pieces):
            gid = id(f.group)
            contrib[gid] = contrib[gid] + piece * f.step

    source_index = [ZERO] * tensor.rank
    resolved: set[int] = set()
    while len(resolved) < len(groups):
        ready = [g for g in groups if g not in resolved and referrers[g] <= resolved]
        if not ready:
            raise ArrangeError("cycle in index group graph")
        for gid in ready:
            group = groups[gid]
            total = simplify(contrib[gid])
            pieces = _decompose(total, [s.size for s in group.slots])
            for slot, piece in zip(group.slots, pieces):
                if isinstance(slot.target, Leaf):
                    d = slot.target.source_dim
                    source_index[d] = source_index[d] + piece * slot.target.step
                else:
                    tid = id(slot.target.group)
                    contrib[tid] = contrib[tid] + piece * slot.target.coeff
            resolved.add(gid)

    source_index = [simplify(e) for e in source_index]
    offset = ZERO
    mask = []
    for d, idx in enumerate(source_index):
        offset = offset + idx * tensor.source_strides[d]
        if idx != ZERO:
            mask.append((idx, tensor.source_sizes[d]))
    return IndexMap(
        param=name,
        lane_sizes=tuple(simplify(s) for s in lane_sizes),
        nest_sizes=tuple(simplify(s) for s in nest_sizes),
        source_index=tuple(source_index),
        offset=simplify(offset),
        mask=tuple(mask),
    )
