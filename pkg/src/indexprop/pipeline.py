"""Program-order driver: straight-line code, loop collapse and the fact store."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .facts import FactEntry, ProgramFacts
from .frontend.ast import (
    ArrayLV,
    Assign,
    For,
    If,
    Program,
    ScalarLV,
    iter_loops,
    iter_stmts,
    read_names,
    written_arrays,
)
from .phase1 import Evaluator, LoopContext
from .phase2 import LoopSummary, analyze_loop, top_level_context
from .symbolic import BOTTOM_RANGE, BigLam, SymRange, range_union, substitute_range


@dataclass
class LoopEntry:
    """What is known when the top-level nest containing a loop is entered."""

    facts: Tuple[FactEntry, ...]
    scalars: Dict[str, SymRange]
    nest_written: frozenset
    top: str  # loop id of the enclosing top-level loop


@dataclass
class PipelineResult:
    program: Program
    facts: ProgramFacts
    summaries: Dict[str, LoopSummary] = field(default_factory=dict)
    order: List[str] = field(default_factory=list)  # loop ids, innermost first
    entries: Dict[str, LoopEntry] = field(default_factory=dict)

    def trace(self) -> List[str]:
        return trace_lines(self)


def _binding(scalars: Dict[str, SymRange], program: Program) -> dict:
    return {
        BigLam(d.name): scalars.get(d.name, BOTTOM_RANGE)
        for d in program.decls
        if program.is_scalar(d.name)
    }


def collapse(loop: For, summary: LoopSummary, facts: ProgramFacts, program: Program) -> ProgramFacts:
    """Replace ``loop`` by its aggregated effect on ``facts`` (updated in place)."""
    binding = _binding(facts.scalars, program)
    for a, r in summary.written.items():
        written = None if r is None else substitute_range(r, binding)
        facts.kill(a, None if written is None or written.is_bottom else written)
    point = {k: v for k, v in binding.items() if v.is_point}
    for f in summary.facts:
        if f.subscript.mentions(lambda a: isinstance(a, BigLam) and a not in point):
            continue
        relative = f.subscript.mentions(lambda a: isinstance(a, BigLam)) or (
            f.value is not None and f.value.mentions(lambda a: isinstance(a, BigLam)))
        sub = f.subscript.substitute({k: v.lo for k, v in point.items()})
        value = None if f.value is None else substitute_range(f.value, binding)
        if value is not None and value.is_bottom:
            continue
        facts.add(FactEntry(f.array, sub, value, f.prop, f.loop_id, f.rule, f.composed or relative))
    new_scalars = dict(facts.scalars)
    for x, v in summary.scalars.items():
        new_scalars[x] = substitute_range(v, binding)
    facts.scalars = new_scalars
    return facts


class _Driver:
    def __init__(self, program: Program):
        self.program = program
        self.params = frozenset(program.params)
        self.result = PipelineResult(program, ProgramFacts(self.params))
        self.point = 0

    def evaluator(self, facts: ProgramFacts) -> Evaluator:
        ctx = LoopContext(self.program, self.params, tuple(facts.facts))
        ev = Evaluator(ctx, facts.assumptions(), None)
        ev.state.update(facts.scalars)
        return ev

    def block(self, stmts, facts: ProgramFacts, top: bool) -> ProgramFacts:
        for s in stmts:
            facts = self.stmt(s, facts)
            if top:
                self.point += 1
                facts.snapshot(self.point, s.line)
        return facts

    def stmt(self, s, facts: ProgramFacts) -> ProgramFacts:
        if isinstance(s, Assign):
            ev = self.evaluator(facts)
            value = ev.eval(s.value)
            t = s.target
            if isinstance(t, ScalarLV):
                facts.scalars = dict(facts.scalars)
                facts.scalars[t.name] = value
                return facts
            subs = [ev.eval(e) for e in t.subscripts]
            decl = self.program.decl(t.name)
            if decl.rank != 1:
                facts.kill(t.name, None)
                return facts
            sub = subs[0]
            facts.kill(t.name, None if sub.is_bottom else sub)
            if decl.kind == "int" and sub.is_point and not value.is_bottom:
                facts.add(FactEntry(t.name, sub, value=value, loop_id="", rule="assign"))
            return facts
        if isinstance(s, If):
            then = self.block(s.then, facts.copy(), False)
            orelse = self.block(s.orelse, facts.copy(), False)
            merged = ProgramFacts(self.params, [f for f in then.facts if f in orelse.facts], {}, facts.timeline)
            asm = facts.assumptions()
            for x in set(then.scalars) | set(orelse.scalars):
                a = then.scalars.get(x, BOTTOM_RANGE)
                b = orelse.scalars.get(x, BOTTOM_RANGE)
                merged.scalars[x] = a if a == b else range_union(a, b, asm)
            return merged
        if isinstance(s, For):
            ctx = top_level_context(self.program, self.params, facts.facts, facts.scalars, s)
            entry = LoopEntry(tuple(facts.facts), dict(facts.scalars), frozenset(written_arrays((s,))), s.loop_id)
            summary = analyze_loop(s, ctx)
            for sub in summary.walk():
                self.result.summaries[sub.loop_id] = sub
                self.result.order.append(sub.loop_id)
                self.result.entries[sub.loop_id] = entry
            return collapse(s, summary, facts, self.program)
        raise TypeError(f"unknown statement {s!r}")


def run_pipeline(program: Program) -> PipelineResult:
    """Analyse ``program`` in program order, collapsing each loop nest from the inside out."""
    d = _Driver(program)
    d.result.facts = d.block(program.body, d.result.facts, True)
    return d.result


# --------------------------------------------------------------------------- #
# trace
# --------------------------------------------------------------------------- #


def scalars_of_interest(program: Program) -> set:
    """Integer scalars whose values flow into a value stored in an array."""
    loop_vars = {lp.var for lp in iter_loops(program.body)}
    deps: Dict[str, set] = {}
    roots = set()
    for s in iter_stmts(program.body):
        if not isinstance(s, Assign):
            continue
        names = read_names(s.value)
        if isinstance(s.target, ArrayLV):
            roots |= names
        else:
            deps.setdefault(s.target.name, set()).update(names)
    seen = set()
    work = list(roots)
    while work:
        x = work.pop()
        if x in seen:
            continue
        seen.add(x)
        work.extend(deps.get(x, ()))
    return {
        x for x in seen
        if program.is_scalar(x) and x not in loop_vars and program.decl(x).kind == "int"
    }


def _direct_arrays(loop: For) -> set:
    out = set()

    def visit(stmts):
        for s in stmts:
            if isinstance(s, Assign) and isinstance(s.target, ArrayLV):
                out.add(s.target.name)
            elif isinstance(s, If):
                visit(s.then)
                visit(s.orelse)

    visit(loop.body)
    return out


def trace_lines(result: PipelineResult) -> List[str]:
    interest = scalars_of_interest(result.program)
    lines = []
    for lid in result.order:
        summary = result.summaries[lid]
        body = summary.body
        arrays = _direct_arrays(summary.loop)
        shown = [x for x in body.order if x in arrays or (x in interest and x in body.scalars)]
        p1, p2 = [], []
        for x in shown:
            if x in arrays:
                p1.append(f"{x}: {body.arrays[x].render(summary.loop.var)}")
                p2.append(f"{x}: {summary.array_render(x)}")
            else:
                p1.append(f"{x}: {body.scalars[x].render(owner=x)}")
                p2.append(f"{x}: {summary.scalars[x].render(owner=x)}")
        line = summary.loop.line
        lines.append(f"Phase 1 ({line}): {'; '.join(p1)}".rstrip())
        lines.append(f"Phase 2 ({line}): {'; '.join(p2)}".rstrip())
    return lines
