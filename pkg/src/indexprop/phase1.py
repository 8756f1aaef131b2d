"""Per-iteration abstract interpretation of a loop body.

Scalars start each iteration at ``λ`` (their own value on iteration entry);
scalars the body never writes are loop-invariant and read as ``Λ``.
Array writes are recorded per simple offset ``i+k``; any other subscript
poisons the array.  Inner loops are analysed first and replaced by their
aggregated effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set

from .frontend.ast import (
    ArrayLV,
    Assign,
    BinOp,
    For,
    If,
    Index,
    Name,
    Neg,
    Num,
    Program,
    ScalarLV,
    iter_stmts,
    written_scalars,
)
from .frontend.subscripts import NonSimple, SimpleOffset, classify_subscript
from .symbolic import (
    BOTTOM_RANGE,
    Assumptions,
    BigLam,
    LoopIndex,
    Property,
    SymRange,
    big_lam,
    compare,
    elem,
    holds,
    idx,
    lam,
    lit,
    range_add,
    range_mul,
    range_neg,
    range_sub,
    range_union,
    substitute_range,
    var,
)


@dataclass
class ArrayEffect:
    name: str
    writes: Dict[int, SymRange] = field(default_factory=dict)
    poisoned: bool = False

    @property
    def is_bottom(self) -> bool:
        return self.poisoned or any(v.is_bottom for v in self.writes.values())

    def copy(self) -> "ArrayEffect":
        return ArrayEffect(self.name, dict(self.writes), self.poisoned)

    def render(self, loop_var: str) -> str:
        if self.is_bottom or not self.writes:
            return "⊥"
        parts = []
        for k in sorted(self.writes):
            parts.append(f"[{(idx(loop_var) + k).render()}], {self.writes[k].render()}")
        return "; ".join(parts)


@dataclass
class BodySummary:
    loop: For
    scalars: Dict[str, SymRange]
    arrays: Dict[str, ArrayEffect]
    order: List[str]
    reads: Set[str]
    inner: list = field(default_factory=list)

    @property
    def loop_var(self) -> str:
        return self.loop.var

    def render_items(self, names=None):
        out = []
        for n in self.order:
            if names is not None and n not in names:
                continue
            if n in self.arrays:
                out.append((n, self.arrays[n].render(self.loop.var)))
            elif n in self.scalars:
                out.append((n, self.scalars[n].render(owner=n)))
        return out


@dataclass
class LoopContext:
    """Read-only information available while analysing one loop."""

    program: Program
    params: frozenset
    facts: tuple = ()
    enclosing: Dict[str, SymRange] = field(default_factory=dict)
    entry: Dict[str, SymRange] = field(default_factory=dict)
    nest_written: frozenset = frozenset()
    analyze_loop: Optional[Callable] = None

    def assumptions(self, extra_ranges=None) -> Assumptions:
        ranges = {LoopIndex(v): r for v, r in self.enclosing.items()}
        ranges.update({BigLam(x): r for x, r in self.entry.items()})
        ranges.update(extra_ranges or {})
        return Assumptions(self.params, ranges, tuple(self.facts))


def _direct_simple_arrays(loop: For) -> Set[str]:
    """Arrays whose writes in ``loop`` are all direct statements with simple subscripts."""
    ok: Dict[str, bool] = {}

    def visit(stmts, nested: bool) -> None:
        for s in stmts:
            if isinstance(s, Assign) and isinstance(s.target, ArrayLV):
                simple = not nested and isinstance(
                    classify_subscript(s.target.subscripts[0], loop.var), SimpleOffset
                )
                ok[s.target.name] = ok.get(s.target.name, True) and simple
            elif isinstance(s, If):
                visit(s.then, nested)
                visit(s.orelse, nested)
            elif isinstance(s, For):
                visit(s.body, True)

    visit(loop.body, False)
    return {a for a, v in ok.items() if v}


class Evaluator:
    """Symbolic evaluation of kernel expressions to may-ranges."""

    def __init__(self, ctx: LoopContext, asm: Assumptions, loop: Optional[For] = None):
        self.ctx = ctx
        self.asm = asm
        self.loop = loop
        self.state: Dict[str, SymRange] = {}
        self.arrays: Dict[str, ArrayEffect] = {}
        self.reads: Set[str] = set()
        if loop is not None:
            self.written_here = written_scalars(loop.body)
            self.atom_arrays = _direct_simple_arrays(loop)
        else:
            self.written_here = set()
            self.atom_arrays = set()

    # scalars ------------------------------------------------------------- #

    def initial(self, x: str) -> SymRange:
        """Value of scalar ``x`` before anything in this iteration wrote it."""
        if self.loop is not None and x == self.loop.var:
            return SymRange.point(idx(x))
        if x in self.ctx.enclosing:
            return SymRange.point(idx(x))
        if x in self.ctx.params:
            return SymRange.point(var(x))
        if self.loop is None:
            return BOTTOM_RANGE
        if x in self.written_here:
            return SymRange.point(lam(x))
        return SymRange.point(big_lam(x))

    def read_scalar(self, x: str) -> SymRange:
        if x in self.state:
            return self.state[x]
        return self.initial(x)

    # arrays -------------------------------------------------------------- #

    def read_array(self, e: Index) -> SymRange:
        self.reads.add(e.array)
        subs = [self.eval(s) for s in e.subscripts]
        d = self.ctx.program.decl(e.array)
        if d is None or d.rank != 1 or d.kind != "int":
            return BOTTOM_RANGE
        a, sub = e.array, subs[0]
        if self.loop is not None and a in self.atom_arrays:
            eff = self.arrays.get(a)
            c = classify_subscript(e.subscripts[0], self.loop.var)
            if isinstance(c, NonSimple) or (eff is not None and eff.poisoned):
                return BOTTOM_RANGE
            if eff is not None and c.k in eff.writes:
                return eff.writes[c.k]
            return SymRange.point(elem(a, idx(self.loop.var) + c.k))
        if self.loop is not None and (a in self.written_arrays() or a in self.ctx.nest_written):
            return BOTTOM_RANGE
        return self.lookup_fact(a, sub)

    def written_arrays(self) -> Set[str]:
        from .frontend.ast import written_arrays

        if not hasattr(self, "_written_arrays"):
            self._written_arrays = written_arrays(self.loop.body) if self.loop is not None else set()
        return self._written_arrays

    def lookup_fact(self, array: str, sub: SymRange) -> SymRange:
        if sub.is_bottom:
            return BOTTOM_RANGE
        for f in self.ctx.facts:
            if f.array != array:
                continue
            if not (
                holds(compare(f.subscript.lo, sub.lo, self.asm), "<=")
                and holds(compare(sub.hi, f.subscript.hi, self.asm), "<=")
            ):
                continue
            if f.value is not None and not f.value.is_bottom:
                self.asm.note(f)
                return f.value
            if f.prop is Property.Identity:
                self.asm.note(f)
                return sub
        return BOTTOM_RANGE

    # expressions --------------------------------------------------------- #

    def eval(self, e) -> SymRange:
        if isinstance(e, Num):
            return SymRange.point(lit(e.value))
        if isinstance(e, Name):
            return self.read_scalar(e.id)
        if isinstance(e, Index):
            return self.read_array(e)
        if isinstance(e, Neg):
            return range_neg(self.eval(e.operand))
        if isinstance(e, BinOp):
            a, b = self.eval(e.left), self.eval(e.right)
            if e.op == "+":
                return range_add(a, b)
            if e.op == "-":
                return range_sub(a, b)
            return range_mul(a, b)
        raise TypeError(f"cannot evaluate {e!r}")

    def eval_cond(self, c) -> None:
        """Conditions do not refine ranges; only their reads are recorded."""
        from .frontend.ast import walk_expr

        for x in walk_expr(c):
            if isinstance(x, Index):
                self.reads.add(x.array)


def eval_expr(expr, ctx: LoopContext, state: Optional[Dict[str, SymRange]] = None, loop: Optional[For] = None,
              asm: Optional[Assumptions] = None) -> SymRange:
    """May-range of ``expr`` under the given scalar states and visible facts."""
    ev = Evaluator(ctx, asm or ctx.assumptions(), loop)
    if state:
        ev.state.update(state)
    return ev.eval(expr)


class _BodyInterp(Evaluator):
    def __init__(self, loop: For, ctx: LoopContext, asm: Assumptions):
        super().__init__(ctx, asm, loop)
        self.order: List[str] = []
        self.inner: list = []

    def touch(self, name: str) -> None:
        if name not in self.order:
            self.order.append(name)

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s) -> None:
        if isinstance(s, Assign):
            value = self.eval(s.value)
            t = s.target
            if isinstance(t, ScalarLV):
                self.state[t.name] = value
                self.touch(t.name)
                return
            for sub in t.subscripts:
                self.eval(sub)
            eff = self.arrays.setdefault(t.name, ArrayEffect(t.name))
            self.touch(t.name)
            c = classify_subscript(t.subscripts[0], self.loop.var)
            if isinstance(c, SimpleOffset):
                eff.writes[c.k] = value
            else:
                eff.poisoned = True
        elif isinstance(s, If):
            self.eval_cond(s.cond)
            self.branch_merge(s)
        elif isinstance(s, For):
            self.inner_loop(s)

    def branch_merge(self, s: If) -> None:
        before_state = dict(self.state)
        before_arrays = {k: v.copy() for k, v in self.arrays.items()}
        self.block(s.then)
        then_state, then_arrays = self.state, self.arrays
        self.state = dict(before_state)
        self.arrays = {k: v.copy() for k, v in before_arrays.items()}
        self.block(s.orelse)
        else_state, else_arrays = self.state, self.arrays

        merged = {}
        for x in set(then_state) | set(else_state):
            a = then_state.get(x, before_state.get(x, self.initial(x)))
            b = else_state.get(x, before_state.get(x, self.initial(x)))
            merged[x] = a if a == b else range_union(a, b, self.asm)
        arrays = {}
        for name in set(then_arrays) | set(else_arrays):
            pre = before_arrays.get(name, ArrayEffect(name))
            ta = then_arrays.get(name, pre)
            ea = else_arrays.get(name, pre)
            eff = ArrayEffect(name, poisoned=ta.poisoned or ea.poisoned)
            for k in set(ta.writes) | set(ea.writes):
                if k in ta.writes and k in ea.writes:
                    va, vb = ta.writes[k], ea.writes[k]
                    eff.writes[k] = va if va == vb else range_union(va, vb, self.asm)
                else:
                    # the element keeps its previous, unknown value on the other path
                    eff.writes[k] = BOTTOM_RANGE
            arrays[name] = eff
        self.state = merged
        self.arrays = arrays

    def inner_loop(self, s: For) -> None:
        entry = {x: self.read_scalar(x) for x in self._scalars_in(s)}
        enclosing = dict(self.ctx.enclosing)
        enclosing[self.loop.var] = self.asm.ranges.get(LoopIndex(self.loop.var), BOTTOM_RANGE)
        inner_ctx = LoopContext(
            self.ctx.program,
            self.ctx.params,
            self.ctx.facts,
            enclosing,
            entry,
            self.ctx.nest_written,
            self.ctx.analyze_loop,
        )
        summary = self.ctx.analyze_loop(s, inner_ctx)
        self.inner.append(summary)
        binding = {BigLam(x): r for x, r in entry.items()}
        for x, effect in summary.scalars.items():
            self.state[x] = substitute_range(effect, binding)
            self.touch(x)
        for a in sorted(summary.written):
            eff = self.arrays.setdefault(a, ArrayEffect(a))
            eff.poisoned = True
            self.touch(a)
        self.reads |= summary.reads

    def _scalars_in(self, s: For) -> Set[str]:
        from .frontend.ast import stmt_exprs, walk_expr

        names = set()
        for t in iter_stmts((s,)):
            for e in stmt_exprs(t):
                names |= {x.id for x in walk_expr(e) if isinstance(x, Name)}
            if isinstance(t, Assign) and isinstance(t.target, ScalarLV):
                names.add(t.target.name)
        return {
            n for n in names if self.ctx.program.is_scalar(n) and n != self.loop.var and n not in self.ctx.enclosing
        }


def analyze_body(loop: For, ctx: LoopContext, asm: Assumptions) -> BodySummary:
    """Effect of one iteration of ``loop`` on integer scalars and simply-subscripted arrays."""
    interp = _BodyInterp(loop, ctx, asm)
    interp.block(loop.body)
    return BodySummary(loop, interp.state, interp.arrays, interp.order, interp.reads, interp.inner)
