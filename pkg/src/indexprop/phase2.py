"""Aggregation of a per-iteration summary across the iteration space.

Scalar results are expressed over ``Λ`` (the value on loop entry); array
results become facts over subscript must-ranges.  Anything outside the
supported rules is ``⊥``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from .facts import FactEntry
from .frontend.ast import For, written_arrays
from .phase1 import ArrayEffect, BodySummary, Evaluator, LoopContext, analyze_body
from .symbolic import (
    BOTTOM,
    BOTTOM_RANGE,
    Assumptions,
    Elem,
    Lam,
    LoopIndex,
    Property,
    SignFact,
    SymExpr,
    SymRange,
    big_lam,
    compare,
    holds,
    idx,
    range_union,
    sign_of,
    substitute_range,
)


@dataclass
class LoopSummary:
    loop: For
    lower: SymRange
    upper: SymRange
    n: SymExpr
    body: BodySummary
    scalars: Dict[str, SymRange] = field(default_factory=dict)
    facts: List[FactEntry] = field(default_factory=list)
    # array -> written subscript range; None means unknown (whole array)
    written: Dict[str, Optional[SymRange]] = field(default_factory=dict)
    reads: set = field(default_factory=set)
    collapsed: bool = True

    @property
    def loop_id(self) -> str:
        return self.loop.loop_id

    def walk(self):
        """This summary and all nested ones, innermost first."""
        for s in self.body.inner:
            yield from s.walk()
        yield self

    def array_render(self, name: str) -> str:
        parts = []
        for f in self.facts:
            if f.array != name or f.rule == "derived":
                continue
            what = f.value.render() if f.value is not None else f.prop.value
            parts.append(f"{f.subscript.render()}, {what}")
        return "; ".join(parts) if parts else "⊥"


# --------------------------------------------------------------------------- #
# scalar rules
# --------------------------------------------------------------------------- #


def sum_closed_form(c, k: SymExpr, n: SymExpr, lower: SymExpr) -> SymExpr:
    """sum over t in [0, n) of c*(lower + t) + k."""
    return n * lower * c + n * (n - 1) * (Fraction(c) / 2) + n * k


def _aggregate_bound(bound: SymExpr, x: str, loop_var: str, n: SymExpr, lower: SymExpr) -> SymExpr:
    """Aggregate ``λ + c*i + k`` to ``Λ + closed form``; bottom otherwise."""
    if bound.bottom or bound.coeff(Lam(x)) != 1:
        return BOTTOM
    rest = bound.without(Lam(x))
    c = rest.coeff(LoopIndex(loop_var))
    k = rest.without(LoopIndex(loop_var))
    if k.mentions(lambda a: isinstance(a, (Lam, Elem)) or a == LoopIndex(loop_var)):
        return BOTTOM
    return big_lam(x) + sum_closed_form(c, k, n, lower)


def aggregate_scalar(x: str, value: SymRange, loop: For, lower: SymRange, n: SymExpr,
                     asm: Assumptions) -> SymRange:
    if value.is_bottom:
        return BOTTOM_RANGE
    if value.mentions(lambda a: isinstance(a, Elem)):
        return BOTTOM_RANGE
    if value.mentions(lambda a: isinstance(a, Lam) and a.name != x):
        return BOTTOM_RANGE
    nonneg = not n.bottom and holds(compare(0, n, asm), "<=")
    if not value.mentions(lambda a: a == Lam(x)):
        # R1: invariant in λ; the loop index ranges over the iteration space
        if value.mentions(lambda a: a == LoopIndex(loop.var)):
            if n.bottom or not lower.is_point:
                return BOTTOM_RANGE
            it = SymRange(lower.lo, lower.lo + n - 1)
            value = substitute_range(value, {LoopIndex(loop.var): it})
        if not n.bottom and holds(compare(1, n, asm), "<="):
            return value
        return range_union(value, SymRange.point(big_lam(x)), asm)
    # R2 / R3: λ + c*i + k on each bound
    if not nonneg or not lower.is_point:
        return BOTTOM_RANGE
    lo = _aggregate_bound(value.lo, x, loop.var, n, lower.lo)
    hi = _aggregate_bound(value.hi, x, loop.var, n, lower.lo)
    return SymRange(lo, hi)


# --------------------------------------------------------------------------- #
# array rules
# --------------------------------------------------------------------------- #


def _recurrence_addend(value: SymRange, array: str, loop_var: str, k: int) -> Optional[SymRange]:
    """For a write ``a[i+k] = a[i+k-1] + addend`` return the addend range."""
    prev = Elem(array, idx(loop_var) + (k - 1))
    if value.lo.coeff(prev) != 1 or value.hi.coeff(prev) != 1:
        return None
    addend = SymRange(value.lo.without(prev), value.hi.without(prev))
    if addend.mentions(lambda a: isinstance(a, (Elem, Lam))):
        return None
    return addend


def aggregate_array(eff: ArrayEffect, loop: For, lower: SymRange, upper: SymRange,
                    asm: Assumptions) -> List[FactEntry]:
    if eff.is_bottom or len(eff.writes) != 1 or not (lower.is_point and upper.is_point):
        return []
    (k, value), = eff.writes.items()
    i = idx(loop.var)
    sub = SymRange(lower.lo + k, upper.lo - 1 + k)
    lid = loop.loop_id
    # R5: x[i+k] = i+k
    if value.is_point and value.lo == i + k:
        return [FactEntry(eff.name, sub, prop=Property.Identity, loop_id=lid, rule="R5")]
    # R4: first-order recurrence
    addend = _recurrence_addend(value, eff.name, loop.var, k)
    if addend is not None:
        sign = sign_of(addend, asm)
        prop = {
            SignFact.StrictlyPositive: Property.StrictMonotonic_inc,
            SignFact.NonNegative: Property.Monotonic_inc,
            SignFact.StrictlyNegative: Property.StrictMonotonic_dec,
            SignFact.NonPositive: Property.Monotonic_dec,
        }.get(sign)
        if prop is None:
            return []
        out = [FactEntry(eff.name, sub, prop=prop, loop_id=lid, rule="R4")]
        if prop.strict:
            elems = SymRange(sub.lo - 1, sub.hi)
            out.append(FactEntry(eff.name, elems, prop=Property.Injective, loop_id=lid, rule="derived"))
        return out
    # R1: loop-invariant value (the own index ranges over the iteration space)
    if value.mentions(lambda a: isinstance(a, (Lam, Elem))):
        return []
    if value.mentions(lambda a: a == LoopIndex(loop.var)):
        value = substitute_range(value, {LoopIndex(loop.var): SymRange(lower.lo, upper.lo - 1)})
        if value.is_bottom:
            return []
    return [FactEntry(eff.name, sub, value=value, loop_id=lid, rule="R1")]


def _written_range(eff: ArrayEffect, lower: SymRange, upper: SymRange) -> Optional[SymRange]:
    if eff.poisoned or not eff.writes or lower.is_bottom or upper.is_bottom:
        return None
    ks = sorted(eff.writes)
    return SymRange(lower.lo + ks[0], upper.hi - 1 + ks[-1])


def aggregate(body: BodySummary, lower: SymRange, upper: SymRange, asm: Assumptions) -> LoopSummary:
    loop = body.loop
    n = upper.lo - lower.lo if lower.is_point and upper.is_point else BOTTOM
    summary = LoopSummary(loop, lower, upper, n, body, reads=set(body.reads))
    for x, v in body.scalars.items():
        summary.scalars[x] = aggregate_scalar(x, v, loop, lower, n, asm)
    for inner in body.inner:
        for a, r in inner.written.items():
            summary.written[a] = None
    for a, eff in body.arrays.items():
        summary.facts.extend(aggregate_array(eff, loop, lower, upper, asm))
        if a not in summary.written:
            summary.written[a] = _written_range(eff, lower, upper)
    # final value of the loop index
    if not n.bottom and holds(compare(0, n, asm), "<="):
        summary.scalars[loop.var] = upper
    else:
        summary.scalars[loop.var] = BOTTOM_RANGE
    return summary


# --------------------------------------------------------------------------- #
# loop driver
# --------------------------------------------------------------------------- #


def loop_bounds(loop: For, ctx: LoopContext) -> tuple:
    """Lower and exclusive upper bound as ranges over ``Λ``-scalars and params."""
    asm = ctx.assumptions()
    ev = Evaluator(ctx, asm, None)
    for x in ctx.program.decls:
        if ctx.program.is_scalar(x.name) and x.name not in ctx.enclosing:
            ev.state[x.name] = SymRange.point(big_lam(x.name))
    return ev.eval(loop.lower), ev.eval(loop.upper)


def analyze_loop(loop: For, ctx: LoopContext) -> LoopSummary:
    """Phase 1 then Phase 2 for ``loop``; inner loops are handled recursively."""
    if ctx.analyze_loop is None:
        ctx.analyze_loop = analyze_loop
    lower, upper = loop_bounds(loop, ctx)
    ranges = {}
    if lower.is_point and upper.is_point:
        ranges[LoopIndex(loop.var)] = SymRange(lower.lo, upper.lo - 1)
    asm = ctx.assumptions(ranges)
    body = analyze_body(loop, ctx, asm)
    return aggregate(body, lower, upper, asm)


def top_level_context(program, params, facts, entry, loop: For) -> LoopContext:
    """Context for a loop at the top level of the program."""
    return LoopContext(
        program, frozenset(params), tuple(facts), {}, dict(entry), frozenset(written_arrays(loop.body)), analyze_loop
    )
