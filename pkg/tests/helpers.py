"""Shared test utilities: seeded random expression/binding generation."""

from __future__ import annotations

import random

from tiledsl.symexpr import SymExpr, cdiv, const, smax, smin, sym

SYMBOL_POOL = ("a", "b", "c", "d")


def random_positive_expr(rng: random.Random, depth: int) -> SymExpr:
    """An expression guaranteed >= 1 under positive bindings (safe divisor)."""
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return sym(rng.choice(SYMBOL_POOL))
        return const(rng.randint(1, 8))
    op = rng.choice(("add", "mul", "max"))
    a = random_positive_expr(rng, depth - 1)
    b = random_positive_expr(rng, depth - 1)
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    return smax(a, b)


def random_expr(rng: random.Random, depth: int = 8) -> SymExpr:
    """Arbitrary expression whose divisors stay nonzero under positive
    bindings."""
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return sym(rng.choice(SYMBOL_POOL))
        return const(rng.randint(-8, 8))
    op = rng.choice(
        ("add", "sub", "mul", "floordiv", "ceildiv", "mod", "min", "max", "neg")
    )
    a = random_expr(rng, depth - 1)
    if op == "neg":
        return -a
    if op in ("floordiv", "ceildiv", "mod"):
        b = random_positive_expr(rng, min(depth - 1, 3))
        if op == "floordiv":
            return a // b
        if op == "mod":
            return a % b
        return cdiv(a, b)
    b = random_expr(rng, depth - 1)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    return smin(a, b) if op == "min" else smax(a, b)


def random_binding(rng: random.Random) -> dict[str, int]:
    return {name: rng.randint(1, 32) for name in SYMBOL_POOL}
