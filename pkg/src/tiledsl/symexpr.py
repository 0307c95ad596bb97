"""Integer symbolic expressions used for shapes, strides, offsets, and masks.

Expressions are immutable trees.  Structural equality after ``simplify`` is
the equality predicate used by arrangement validation; evaluation accepts
plain ints or numpy arrays in the binding so the simulator can evaluate
offset expressions for a whole tile at once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

BINARY_KINDS = ("add", "sub", "mul", "floordiv", "ceildiv", "mod", "min", "max")
ALL_KINDS = ("const", "sym", "neg") + BINARY_KINDS


class SymExprError(Exception):
    """Malformed expression construction."""


class EvalError(SymExprError):
    """Evaluation failure: unbound symbol or zero divisor."""


@dataclass(frozen=True)
class SymExpr:
    kind: str
    value: int = 0
    name: str = ""
    args: tuple["SymExpr", ...] = ()

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise SymExprError(f"unknown expression kind {self.kind!r}")

    # Arithmetic sugar; ints are wrapped as constants.
    def __add__(self, other):
        return SymExpr("add", args=(self, wrap(other)))

    def __radd__(self, other):
        return SymExpr("add", args=(wrap(other), self))

    def __sub__(self, other):
        return SymExpr("sub", args=(self, wrap(other)))

    def __rsub__(self, other):
        return SymExpr("sub", args=(wrap(other), self))

    def __mul__(self, other):
        return SymExpr("mul", args=(self, wrap(other)))

    def __rmul__(self, other):
        return SymExpr("mul", args=(wrap(other), self))

    def __floordiv__(self, other):
        return SymExpr("floordiv", args=(self, wrap(other)))

    def __mod__(self, other):
        return SymExpr("mod", args=(self, wrap(other)))

    def __neg__(self):
        return SymExpr("neg", args=(self,))

    def __repr__(self):
        return f"SymExpr<{render(self)}>"


def const(k: int) -> SymExpr:
    return SymExpr("const", value=int(k))


def sym(name: str) -> SymExpr:
    if not name or not _IDENT_RE.match(name):
        raise SymExprError(f"symbol name must be a nonempty identifier, got {name!r}")
    return SymExpr("sym", name=name)


def wrap(x: Union[int, SymExpr]) -> SymExpr:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, (int, np.integer)):
        return const(int(x))
    raise SymExprError(f"cannot wrap {type(x).__name__} as SymExpr")


def cdiv(a, b) -> SymExpr:
    return SymExpr("ceildiv", args=(wrap(a), wrap(b)))


def smin(a, b) -> SymExpr:
    return SymExpr("min", args=(wrap(a), wrap(b)))


def smax(a, b) -> SymExpr:
    return SymExpr("max", args=(wrap(a), wrap(b)))


ZERO = const(0)
ONE = const(1)


def free_symbols(e: SymExpr) -> frozenset:
    if e.kind == "sym":
        return frozenset((e.name,))
    if e.kind == "const":
        return frozenset()
    out = frozenset()
    for a in e.args:
        out |= free_symbols(a)
    return out


def substitute(e: SymExpr, mapping: Mapping[str, SymExpr]) -> SymExpr:
    if e.kind == "sym":
        return mapping.get(e.name, e)
    if e.kind == "const":
        return e
    return SymExpr(e.kind, args=tuple(substitute(a, mapping) for a in e.args))


def evaluate(e: SymExpr, binding: Mapping[str, int]):
    """Evaluate under a binding of all free symbols.

    Binding values may be ints or numpy integer arrays; the result follows.
    Division or modulo by zero raises EvalError, as does an unbound symbol.
    """
    if e.kind == "const":
        return e.value
    if e.kind == "sym":
        try:
            return binding[e.name]
        except KeyError:
            raise EvalError(f"unbound symbol {e.name!r}") from None
    if e.kind == "neg":
        return -evaluate(e.args[0], binding)
    a = evaluate(e.args[0], binding)
    b = evaluate(e.args[1], binding)
    if e.kind == "add":
        return a + b
    if e.kind == "sub":
        return a - b
    if e.kind == "mul":
        return a * b
    if e.kind in ("floordiv", "ceildiv", "mod"):
        _check_divisor(b)
        if e.kind == "floordiv":
            return a // b
        if e.kind == "ceildiv":
            return -((-a) // b)
        return a % b
    if e.kind == "min":
        return np.minimum(a, b) if _any_array(a, b) else min(a, b)
    if e.kind == "max":
        return np.maximum(a, b) if _any_array(a, b) else max(a, b)
    raise SymExprError(f"unhandled kind {e.kind}")


def _any_array(a, b):
    return isinstance(a, np.ndarray) or isinstance(b, np.ndarray)


def _check_divisor(b):
    if isinstance(b, np.ndarray):
        if np.any(b == 0):
            raise EvalError("division or modulo by zero")
    elif b == 0:
        raise EvalError("division or modulo by zero")


def simplify(e: SymExpr) -> SymExpr:
    """Constant folding plus a fixed identity set.

    The output evaluates identically to the input under every binding; zero
    divisors are never folded away (they stay as evaluation errors).
    """
    if e.kind in ("const", "sym"):
        return e
    args = tuple(simplify(a) for a in e.args)
    node = SymExpr(e.kind, args=args)
    for _ in range(8):
        new = _rewrite(node)
        if new is node:
            return node
        node = new
        if node.kind in ("const", "sym"):
            return node
    return node


def _is_const(e: SymExpr, k=None) -> bool:
    return e.kind == "const" and (k is None or e.value == k)


def _rewrite(e: SymExpr) -> SymExpr:
    if e.kind == "neg":
        (a,) = e.args
        if a.kind == "neg":
            return a.args[0]
        if a.kind == "const":
            return const(-a.value)
        return e
    a, b = e.args
    if a.kind == "const" and b.kind == "const":
        if e.kind not in ("floordiv", "ceildiv", "mod") or b.value != 0:
            return const(evaluate(e, {}))
    if e.kind == "add":
        if _is_const(a, 0):
            return b
        if _is_const(b, 0):
            return a
    elif e.kind == "sub":
        if _is_const(b, 0):
            return a
        if a == b and a.kind != "const":
            return ZERO
    elif e.kind == "mul":
        if _is_const(a, 1):
            return b
        if _is_const(b, 1):
            return a
        if _is_const(a, 0) or _is_const(b, 0):
            return ZERO
    elif e.kind in ("floordiv", "ceildiv"):
        if _is_const(b, 1):
            return a
        if _is_const(a, 0) and not _is_const(b):
            return ZERO
        if a == b and a.kind != "const":
            return ONE
    elif e.kind == "mod":
        if _is_const(b, 1):
            return ZERO
        if _is_const(a, 0) and not _is_const(b):
            return ZERO
        if a == b and a.kind != "const":
            return ZERO
    elif e.kind in ("min", "max"):
        if a == b:
            return a
    return e


# --- serialization ------------------------------------------------------

def to_json(e: SymExpr):
    if e.kind == "const":
        return ["const", e.value]
    if e.kind == "sym":
        return ["sym", e.name]
    return [e.kind] + [to_json(a) for a in e.args]


def from_json(obj) -> SymExpr:
    if not isinstance(obj, list) or not obj:
        raise SymExprError(f"malformed expression JSON: {obj!r}")
    tag = obj[0]
    if tag == "const":
        return const(obj[1])
    if tag == "sym":
        return sym(obj[1])
    if tag == "neg":
        if len(obj) != 2:
            raise SymExprError("neg takes one argument")
        return SymExpr("neg", args=(from_json(obj[1]),))
    if tag in BINARY_KINDS:
        if len(obj) != 3:
            raise SymExprError(f"{tag} takes two arguments")
        return SymExpr(tag, args=(from_json(obj[1]), from_json(obj[2])))
    raise SymExprError(f"unknown expression tag {tag!r}")


# --- rendering ----------------------------------------------------------

@dataclass(frozen=True)
class RenderStyle:
    """Infix printer configuration; ceildiv/min/max render as calls."""

    cdiv: str = "cdiv"
    min_: str = "min"
    max_: str = "max"


_PREC = {"add": 10, "sub": 10, "mul": 20, "floordiv": 20, "mod": 20, "neg": 25}


def render(e: SymExpr, style: RenderStyle = RenderStyle()) -> str:
    return _render(e, style, 0)


def _render(e: SymExpr, style: RenderStyle, parent_prec: int) -> str:
    if e.kind == "const":
        return str(e.value)
    if e.kind == "sym":
        return e.name
    if e.kind == "ceildiv":
        a = _render(e.args[0], style, 0)
        b = _render(e.args[1], style, 0)
        return f"{style.cdiv}({a}, {b})"
    if e.kind in ("min", "max"):
        fn = style.min_ if e.kind == "min" else style.max_
        a = _render(e.args[0], style, 0)
        b = _render(e.args[1], style, 0)
        return f"{fn}({a}, {b})"
    if e.kind == "neg":
        inner = _render(e.args[0], style, _PREC["neg"] + 1)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC["neg"] else text
    prec = _PREC[e.kind]
    op = {"add": " + ", "sub": " - ", "mul": " * ", "floordiv": " // ", "mod": " % "}[e.kind]
    left = _render(e.args[0], style, prec)
    # The right operand is always parenthesized at equal precedence: even for
    # an associative operator the child may mix same-precedence operators
    # (e.g. % under *), where flattening regroups the expression.
    right = _render(e.args[1], style, prec + 1)
    text = f"{left}{op}{right}"
    return f"({text})" if prec < parent_prec else text
