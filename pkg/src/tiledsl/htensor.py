"""Hierarchical symbolic tensors and their compile-time meta-operations.

A tensor is an ordered list of levels (outermost first); each level holds
dims, each dim an ordered list of factors.  Factors never touch data: every
meta-operation is pure structure manipulation.

Addressing model: every factor feeds ``index * step`` into an index group.
A group decomposes its accumulated logical index mixed-radix over its slots;
slots either land on a source dimension (leaf) or feed another group with a
coefficient.  Plain tensors only ever see single-leaf groups, where ``step``
coincides with the advance-per-unit-index in source elements.  Tiling a
flattened (multi-factor) dim introduces a fresh group over the constituent
factors so the split index is decomposed jointly, which is what implicit-GEMM
style arrangements need.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .symexpr import (
    ONE,
    ZERO,
    SymExpr,
    cdiv,
    const,
    simplify,
    sym,
    wrap,
)

FULL = -1
KEEP = -1
DEFAULT = -1

SCALAR_KINDS = ("f32", "f16", "i32")


class HTensorError(Exception):
    pass


@dataclass(frozen=True)
class Leaf:
    """Terminal addressing slot: index * step lands on a source dimension."""

    step: SymExpr
    source_dim: int


@dataclass(frozen=True)
class GroupRef:
    """Slot that feeds its index, scaled by coeff, into another group."""

    coeff: SymExpr
    group: "Group"


@dataclass(frozen=True)
class Slot:
    size: SymExpr
    target: Union[Leaf, GroupRef]


@dataclass(frozen=True)
class Group:
    slots: tuple[Slot, ...]


def _leaf_group(step: SymExpr, source_dim: int, size: SymExpr) -> Group:
    return Group(slots=(Slot(size=size, target=Leaf(step=step, source_dim=source_dim)),))


@dataclass(frozen=True)
class Factor:
    size: SymExpr
    step: SymExpr  # multiplier applied to this factor's index before the group
    group: Group

    @property
    def source_dim(self) -> int:
        """Source dimension, defined for factors over single-leaf groups."""
        if len(self.group.slots) == 1 and isinstance(self.group.slots[0].target, Leaf):
            return self.group.slots[0].target.source_dim
        raise HTensorError("factor spans multiple source dimensions")


@dataclass(frozen=True)
class Dim:
    factors: tuple[Factor, ...]

    @property
    def size(self) -> SymExpr:
        out = self.factors[0].size
        for f in self.factors[1:]:
            out = out * f.size
        return simplify(out)


@dataclass(frozen=True)
class Level:
    dims: tuple[Dim, ...]

    @property
    def shape(self) -> tuple[SymExpr, ...]:
        return tuple(d.size for d in self.dims)


@dataclass(frozen=True)
class HTensor:
    name: str
    kind: str
    source_sizes: tuple[SymExpr, ...]
    source_strides: tuple[SymExpr, ...]
    levels: tuple[Level, ...]
    shape_constexpr: bool = False
    # Launch-time equality assertions (lhs == rhs) recorded by operations
    # whose preconditions cannot be discharged structurally.
    checks: tuple[tuple[SymExpr, SymExpr], ...] = ()

    @property
    def rank(self) -> int:
        return len(self.source_sizes)

    @property
    def shape(self) -> tuple[SymExpr, ...]:
        return self.levels[0].shape

    def level_shape(self, i: int) -> tuple[SymExpr, ...]:
        return self.levels[i].shape

    # -- meta-operations (all return new tensors) -------------------------

    def tile(
        self,
        tile_shape: Sequence[Union[SymExpr, int]],
        strides: Optional[Sequence[Union[SymExpr, int]]] = None,
    ) -> "HTensor":
        dims = self.levels[0].dims
        if len(tile_shape) != len(dims):
            raise HTensorError(
                f"tile shape has {len(tile_shape)} entries for {len(dims)} dims"
            )
        if strides is not None and len(strides) != len(dims):
            raise HTensorError("strides length must match tile shape length")
        outer_dims = []
        inner_dims = []
        for d, dim in enumerate(dims):
            size = dim.size
            t = tile_shape[d]
            tile_size = size if _is_default(t) else wrap(t)
            s = strides[d] if strides is not None else DEFAULT
            stride = tile_size if _is_default(s) else wrap(s)
            stride = simplify(stride)
            tile_size = simplify(tile_size)
            if stride.kind == "const" and stride.value <= 0:
                raise HTensorError(f"tile stride must be positive, got {stride.value}")
            if stride == tile_size:
                count = simplify(cdiv(size, tile_size))
            else:
                count = simplify((size - tile_size) // stride + 1)
            if len(dim.factors) == 1:
                f = dim.factors[0]
                outer = Factor(count, simplify(f.step * stride), f.group)
                inner = Factor(tile_size, f.step, f.group)
            else:
                group = Group(
                    slots=tuple(
                        Slot(size=f.size, target=GroupRef(coeff=f.step, group=f.group))
                        for f in dim.factors
                    )
                )
                outer = Factor(count, stride, group)
                inner = Factor(tile_size, ONE, group)
            outer_dims.append(Dim((outer,)))
            inner_dims.append(Dim((inner,)))
        levels = (Level(tuple(outer_dims)), Level(tuple(inner_dims))) + self.levels[1:]
        return replace(self, levels=levels)

    def expand(self, shape: Sequence[Union[SymExpr, int]]) -> "HTensor":
        dims = self.levels[0].dims
        if len(shape) != len(dims):
            raise HTensorError(f"expand shape has {len(shape)} entries for {len(dims)} dims")
        new_dims = []
        for d, dim in enumerate(dims):
            if _is_default(shape[d]):
                new_dims.append(dim)
                continue
            if len(dim.factors) != 1 or simplify(dim.size) != ONE:
                raise HTensorError(f"expand of non-singleton dim {d}")
            f = dim.factors[0]
            new_dims.append(Dim((Factor(simplify(wrap(shape[d])), ZERO, f.group),)))
        levels = (Level(tuple(new_dims)),) + self.levels[1:]
        return replace(self, levels=levels)

    def squeeze(self, dim: int) -> "HTensor":
        dims = self.levels[0].dims
        if not 0 <= dim < len(dims):
            raise HTensorError(f"squeeze dim {dim} out of range for {len(dims)} dims")
        target = dims[dim]
        if len(target.factors) != 1:
            raise HTensorError("squeeze of a flattened dim")
        size = simplify(target.size)
        checks = self.checks
        if size.kind == "const":
            if size.value != 1:
                raise HTensorError(f"squeeze of dim with size {size.value}")
        else:
            # Not provably singleton; defer to a launch-time assertion.
            checks = checks + ((size, ONE),)
        levels = (Level(dims[:dim] + dims[dim + 1 :]),) + self.levels[1:]
        return replace(self, levels=levels, checks=checks)

    def permute(self, order: Sequence[int]) -> "HTensor":
        dims = self.levels[0].dims
        if sorted(order) != list(range(len(dims))):
            raise HTensorError(f"{tuple(order)} is not a permutation of {len(dims)} dims")
        levels = (Level(tuple(dims[i] for i in order)),) + self.levels[1:]
        return replace(self, levels=levels)

    def flatten(self, start_dim: int = 0, end_dim: Optional[int] = None) -> "HTensor":
        dims = self.levels[0].dims
        end = len(dims) if end_dim is None else end_dim
        if not (0 <= start_dim < end <= len(dims)) or end - start_dim < 2:
            raise HTensorError(f"flatten span [{start_dim}, {end}) is degenerate")
        merged = Dim(tuple(f for d in dims[start_dim:end] for f in d.factors))
        levels = (Level(dims[:start_dim] + (merged,) + dims[end:]),) + self.levels[1:]
        return replace(self, levels=levels)

    def ravel(self) -> "HTensor":
        dims = tuple(d for lvl in self.levels for d in lvl.dims)
        return replace(self, levels=(Level(dims),))

    def get_inner(self) -> "HTensor":
        if len(self.levels) < 2:
            raise HTensorError("get_inner on a single-level tensor")
        return replace(self, levels=self.levels[1:])

    def set_inner(self, inner: "HTensor") -> "HTensor":
        if inner.name != self.name or inner.rank != self.rank:
            raise HTensorError("set_inner with mismatched source identity")
        checks = self.checks + tuple(c for c in inner.checks if c not in self.checks)
        return replace(self, levels=self.levels[:1] + inner.levels, checks=checks)


def _is_default(x) -> bool:
    return x is None or (isinstance(x, int) and x == -1)


def new_param(
    name: str,
    rank: int,
    kind: str = "f32",
    shape_constexpr: bool = False,
) -> HTensor:
    """A fresh single-level parameter with auto-named size/stride symbols."""
    if rank < 1:
        raise HTensorError(f"parameter rank must be >= 1, got {rank}")
    if kind not in SCALAR_KINDS:
        raise HTensorError(f"unknown scalar kind {kind!r}")
    sizes = tuple(sym(f"{name}_size_{i}") for i in range(rank))
    strides = tuple(sym(f"{name}_stride_{i}") for i in range(rank))
    dims = tuple(
        Dim((Factor(sizes[d], ONE, _leaf_group(ONE, d, sizes[d])),)) for d in range(rank)
    )
    return HTensor(
        name=name,
        kind=kind,
        source_sizes=sizes,
        source_strides=strides,
        levels=(Level(dims),),
        shape_constexpr=shape_constexpr,
    )


def param_with_shape(
    name: str,
    shape: Sequence[int],
    kind: str = "f32",
) -> HTensor:
    """Parameter whose sizes are constants (strides stay symbolic).

    Constant shapes let arrangement consistency be discharged structurally.
    """
    if len(shape) < 1:
        raise HTensorError("shape must have at least one dim")
    sizes = tuple(const(s) for s in shape)
    strides = tuple(sym(f"{name}_stride_{i}") for i in range(len(shape)))
    dims = tuple(
        Dim((Factor(sizes[d], ONE, _leaf_group(ONE, d, sizes[d])),))
        for d in range(len(shape))
    )
    return HTensor(
        name=name,
        kind=kind,
        source_sizes=sizes,
        source_strides=strides,
        levels=(Level(dims),),
    )
