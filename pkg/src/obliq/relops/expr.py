"""Row expressions over secret tables: comparisons, boolean logic and arithmetic.

Comparison operands are brought to boolean encoding at a common width;
arithmetic operands to arithmetic encoding at the result width. Constants
adopt the width of the other operand.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..mpcore import (ARITH, BOOL, SecretVector, a2b, add, and_, b2a, eq, lt, mul, mul_public,
                      not_, or_, public_const, sub, with_width)


class PlanError(ValueError):
    """A plan or expression that violates a validation rule."""


@dataclass(frozen=True)
class Expr:
    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Col(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class _Binary(Expr):
    left: "ExprLike"
    right: "ExprLike"


class Eq(_Binary): pass
class Ne(_Binary): pass
class Lt(_Binary): pass
class Le(_Binary): pass
class Gt(_Binary): pass
class Ge(_Binary): pass
class And(_Binary): pass
class Or(_Binary): pass


@dataclass(frozen=True)
class Not(Expr):
    inner: "ExprLike"


@dataclass(frozen=True)
class Arith(Expr):
    """Arithmetic node; width None means max of operand widths."""

    op: str  # "add", "sub", "mul"
    left: "ExprLike"
    right: "ExprLike"
    width: int | None = None


def Add(a, b, width=None):
    return Arith("add", a, b, width)


def Sub(a, b, width=None):
    return Arith("sub", a, b, width)


def Mul(a, b, width=None):
    return Arith("mul", a, b, width)


ExprLike = Union[Expr, str, int]
COMPARISONS = (Eq, Ne, Lt, Le, Gt, Ge)
LOGICAL = (And, Or)


def lift(e: ExprLike) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, str):
        return Col(e)
    if isinstance(e, (int, np.integer)):
        return Const(int(e))
    raise PlanError(f"cannot use {e!r} in an expression")


def columns_of(e: ExprLike) -> set[str]:
    e = lift(e)
    if isinstance(e, Col):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Not):
        return columns_of(e.inner)
    return columns_of(e.left) | columns_of(e.right)


def infer_type(e: ExprLike, schema: dict[str, int]) -> tuple[str, int]:
    """("bool"|"int", width) of an expression; raises PlanError on unknown columns."""
    e = lift(e)
    if isinstance(e, Col):
        if e.name not in schema:
            raise PlanError(f"unknown column {e.name!r}")
        return "int", schema[e.name]
    if isinstance(e, Const):
        return "int", max(1, int(e.value).bit_length())
    if isinstance(e, Not):
        kind, _ = infer_type(e.inner, schema)
        if kind != "bool":
            raise PlanError("NOT needs a predicate")
        return "bool", 1
    if isinstance(e, LOGICAL):
        for side in (e.left, e.right):
            if infer_type(side, schema)[0] != "bool":
                raise PlanError("AND/OR need predicates")
        return "bool", 1
    if isinstance(e, COMPARISONS):
        for side in (e.left, e.right):
            if infer_type(side, schema)[0] != "int":
                raise PlanError("comparisons need value operands")
        return "bool", 1
    if isinstance(e, Arith):
        lw = _operand_width(e.left, schema)
        rw = _operand_width(e.right, schema)
        w = e.width or max(lw or 1, rw or 1)
        if w > 64:
            raise PlanError("arithmetic wider than 64 bits is unsupported")
        return "int", w
    raise PlanError(f"unknown expression node {e!r}")


def _operand_width(e: ExprLike, schema) -> int | None:
    e = lift(e)
    kind, w = infer_type(e, schema)
    if kind != "int":
        raise PlanError("arithmetic needs value operands")
    return None if isinstance(e, Const) else w


# ---------------------------------------------------------------- conversions

def as_bool(ctx, v: SecretVector, width: int | None = None) -> SecretVector:
    """Boolean view of v, zero-extended or truncated to `width`."""
    if v.enc == ARITH:
        v = a2b(ctx, v)
    return v if width is None or width == v.width else with_width(v, width)


def as_arith(ctx, v: SecretVector, width: int) -> SecretVector:
    """Arithmetic view of v mod 2^width (the value must fit when widening)."""
    if v.enc == BOOL:
        return b2a(ctx, with_width(v, min(v.width, width)) if v.width > width else v, width)
    if v.width >= width:
        return with_width(v, width)
    return b2a(ctx, a2b(ctx, v), width)


# ---------------------------------------------------------------- evaluation

def evaluate(ctx, table, e: ExprLike) -> SecretVector:
    """Evaluate an expression on every row of a SecretTable."""
    e = lift(e)
    n = table.n
    p = table.party
    if isinstance(e, Col):
        return table[e.name]
    if isinstance(e, Const):
        w = max(1, int(e.value).bit_length())
        return public_const(p, n, int(e.value), BOOL, w)
    if isinstance(e, Not):
        return not_(evaluate(ctx, table, e.inner))
    if isinstance(e, And):
        return and_(ctx, evaluate(ctx, table, e.left), evaluate(ctx, table, e.right))
    if isinstance(e, Or):
        return or_(ctx, evaluate(ctx, table, e.left), evaluate(ctx, table, e.right))
    if isinstance(e, COMPARISONS):
        x, y = _comparison_operands(ctx, table, e)
        if isinstance(e, Eq):
            return eq(ctx, x, y)
        if isinstance(e, Ne):
            return not_(eq(ctx, x, y))
        if isinstance(e, Lt):
            return lt(ctx, x, y)
        if isinstance(e, Gt):
            return lt(ctx, y, x)
        if isinstance(e, Le):
            return not_(lt(ctx, y, x))
        return not_(lt(ctx, x, y))  # Ge
    if isinstance(e, Arith):
        schema = {k: v.width for k, v in table.columns.items()}
        _, w = infer_type(e, schema)
        x = _arith_operand(ctx, table, e.left, w)
        y = _arith_operand(ctx, table, e.right, w)
        if e.op == "add":
            return add(x, y)
        if e.op == "sub":
            return sub(x, y)
        if isinstance(lift(e.right), Const):
            return mul_public(x, np.uint64(lift(e.right).value & ((1 << w) - 1)))
        if isinstance(lift(e.left), Const):
            return mul_public(y, np.uint64(lift(e.left).value & ((1 << w) - 1)))
        return mul(ctx, x, y)
    raise PlanError(f"cannot evaluate {e!r}")


def _arith_operand(ctx, table, e: ExprLike, width: int) -> SecretVector:
    e = lift(e)
    if isinstance(e, Const):
        return public_const(table.party, table.n, int(e.value), ARITH, width)
    return as_arith(ctx, evaluate(ctx, table, e), width)


def _comparison_operands(ctx, table, e) -> tuple[SecretVector, SecretVector]:
    l, r = lift(e.left), lift(e.right)
    widths = []
    vals = {}
    for side in (l, r):
        if not isinstance(side, Const):
            v = evaluate(ctx, table, side)
            vals[id(side)] = v
            widths.append(v.width)
    for side in (l, r):
        if isinstance(side, Const):
            widths.append(max(1, int(side.value).bit_length()))
    w = max(widths)
    out = []
    for side in (l, r):
        if isinstance(side, Const):
            out.append(public_const(table.party, table.n, int(side.value), BOOL, w))
        else:
            out.append(as_bool(ctx, vals[id(side)], w))
    return out[0], out[1]
