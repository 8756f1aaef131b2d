"""Classification of array subscripts relative to a loop index."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..symbolic import BOTTOM, SymExpr, lit, var
from .ast import BinOp, Name, Neg, Num


@dataclass(frozen=True)
class SimpleOffset:
    k: int


@dataclass(frozen=True)
class NonSimple:
    pass


Subscript = Union[SimpleOffset, NonSimple]


def fold(expr) -> SymExpr:
    """Constant-folded linear form of an integer expression; array reads give bottom."""
    if isinstance(expr, Num):
        return lit(expr.value)
    if isinstance(expr, Name):
        return var(expr.id)
    if isinstance(expr, Neg):
        return -fold(expr.operand)
    if isinstance(expr, BinOp):
        a, b = fold(expr.left), fold(expr.right)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        return a * b
    return BOTTOM


def classify_subscript(expr, loop_var: Optional[str]) -> Subscript:
    """``SimpleOffset(k)`` iff ``expr`` folds to ``loop_var + k`` for a literal k."""
    if loop_var is None:
        return NonSimple()
    e = fold(expr)
    if e.bottom:
        return NonSimple()
    rest = e - var(loop_var)
    if rest.is_literal and rest.const.denominator == 1:
        return SimpleOffset(int(rest.const))
    return NonSimple()
