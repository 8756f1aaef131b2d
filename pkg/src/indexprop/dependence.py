"""Range-based dependence test driven by index-array facts.

Each candidate loop body is enumerated path by path with exact symbolic
values.  Every array reference becomes an access descriptor whose bounds
are functions of the candidate index ``i``.  A written array is
independent across iterations when either

* ``MonotonicRanges``: ``hi(i) < lo(i+1)`` and ``lo(i) <= lo(i+1)`` for all
  descriptors (checked per index segment, then across segment borders), or
* ``InjectiveWrite``: every reference uses ``c*b[i+k]+d`` with ``c != 0``
  and ``b`` known to be injective over the accessed range.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .facts import FactEntry
from .frontend.ast import (
    ArrayLV,
    Assign,
    BinOp,
    BoolOp,
    Compare,
    For,
    If,
    Index,
    Name,
    Neg,
    Num,
    Program,
    ScalarLV,
    read_names,
    written_arrays,
    written_scalars,
)
from .symbolic import (
    BOTTOM,
    Assumptions,
    BigLam,
    Elem,
    LoopIndex,
    SymExpr,
    SymRange,
    big_lam,
    compare,
    elem,
    holds,
    idx,
    lit,
    substitute_ranges,
    sym_max,
    sym_min,
    var,
)

MAX_PATHS = 64


class Decision(enum.Enum):
    PARALLEL = "parallel"
    SERIAL = "serial"
    UNKNOWN = "unknown"


@dataclass
class Access:
    """One array reference on one path, with bounds over the candidate index."""

    array: str
    kind: str  # "read" | "write"
    subscript: SymExpr  # raw, may mention inner loop indices
    lo: SymExpr
    hi: SymExpr
    line: int
    inner: Tuple[Tuple[str, SymExpr, SymExpr], ...] = ()  # (index, lo, hi) outermost first
    guards: Tuple[object, ...] = ()  # candidate-level conditions on the path
    direct: bool = True  # not under an if or inner loop

    def render(self) -> str:
        return f"{self.kind} {self.array}[{self.lo.render()} : {self.hi.render()}] (line {self.line})"


@dataclass
class Segment:
    lo: SymExpr
    hi: SymExpr
    accesses: List[Access] = field(default_factory=list)

    def render(self, var_name: str) -> str:
        return f"{var_name} in [{self.lo.render()}:{self.hi.render()}]"


@dataclass
class ProofStep:
    query: str
    relation: str
    facts: List[str] = field(default_factory=list)
    ok: bool = True

    def render(self) -> str:
        cited = f"  using {'; '.join(self.facts)}" if self.facts else ""
        return f"{'ok ' if self.ok else 'FAIL'} {self.query}: {self.relation}{cited}"


@dataclass
class Verdict:
    loop_id: str
    decision: str
    rule: Optional[str] = None
    trace: List[ProofStep] = field(default_factory=list)
    peeled: bool = False
    reason: str = ""
    private: List[str] = field(default_factory=list)
    witness: Optional[dict] = None
    rules: Dict[str, str] = field(default_factory=dict)  # array -> rule

    def to_json(self) -> dict:
        return {
            "loop": self.loop_id,
            "decision": self.decision,
            "rule": self.rule,
            "rules": dict(sorted(self.rules.items())),
            "peeled": self.peeled,
            "reason": self.reason,
            "private": list(self.private),
            "witness": self.witness,
            "proof": [
                {"query": s.query, "relation": s.relation, "facts": list(s.facts), "ok": s.ok}
                for s in self.trace
            ],
        }

    def explain(self) -> str:
        head = f"{self.loop_id}: {self.decision}"
        if self.rule:
            head += f" via {self.rule}"
        if self.peeled:
            head += " (first iteration peeled)"
        lines = [head]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        if self.private:
            lines.append(f"private: {', '.join(self.private)}")
        if self.witness:
            lines.append(f"witness: {self.witness}")
        lines.extend("  " + s.render() for s in self.trace)
        return "\n".join(lines)


class NotProved(Exception):
    pass


# --------------------------------------------------------------------------- #
# path enumeration
# --------------------------------------------------------------------------- #


@dataclass
class _Path:
    env: Dict[str, SymExpr]
    defined: set
    lo: SymExpr
    hi: SymExpr
    guards: tuple = ()
    accesses: list = field(default_factory=list)
    violations: set = field(default_factory=set)

    def fork(self) -> "_Path":
        return _Path(dict(self.env), set(self.defined), self.lo, self.hi, self.guards, list(self.accesses),
                     set(self.violations))


class TooManyPaths(Exception):
    pass


class _Collector:
    def __init__(self, loop: For, program: Program, enclosing: Sequence[str], entry: Dict[str, SymRange],
                 asm: Assumptions, lower: SymExpr, upper: SymExpr):
        self.loop = loop
        self.program = program
        self.enclosing = set(enclosing)
        self.entry = entry
        self.asm = asm
        self.written = written_scalars(loop.body)
        self.written_arr = written_arrays(loop.body)
        self.lower, self.upper = lower, upper

    # expressions --------------------------------------------------------- #

    def value(self, e, p: _Path, inner=(), record=True) -> SymExpr:
        if isinstance(e, Num):
            return lit(e.value)
        if isinstance(e, Name):
            x = e.id
            if x == self.loop.var:
                return idx(x)
            if x in p.env:
                return p.env[x]
            if x in self.written:
                if x not in p.defined:
                    p.violations.add(x)
                return BOTTOM
            if x in self.enclosing:
                return idx(x)
            if x in self.program.params:
                return var(x)
            r = self.entry.get(x)
            if r is not None and r.is_point:
                return r.lo
            return big_lam(x)
        if isinstance(e, Index):
            subs = [self.value(s, p, inner, record) for s in e.subscripts]
            d = self.program.decl(e.array)
            if record and d.rank == 1:
                self.record(p, e.array, "read", subs[0], e.line, inner)
            if d.rank != 1 or d.kind != "int" or e.array in self.written_arr:
                return BOTTOM
            return elem(e.array, subs[0])
        if isinstance(e, Neg):
            return -self.value(e.operand, p, inner, record)
        if isinstance(e, BinOp):
            a = self.value(e.left, p, inner, record)
            b = self.value(e.right, p, inner, record)
            return {"+": a + b, "-": a - b, "*": a * b}[e.op]
        if isinstance(e, (Compare, BoolOp)):
            for o in ([e.left, e.right] if isinstance(e, Compare) else e.operands):
                self.value(o, p, inner, record)
            return BOTTOM
        raise TypeError(f"cannot evaluate {e!r}")

    def record(self, p: _Path, array: str, kind: str, sub: SymExpr, line: int, inner) -> None:
        p.accesses.append(Access(array, kind, sub, sub, sub, line, tuple(inner), p.guards,
                                 direct=not inner and not p.guards))

    # index conditions ---------------------------------------------------- #

    def _invariant(self, e: SymExpr) -> bool:
        return not e.bottom and not e.mentions(
            lambda a: a == LoopIndex(self.loop.var) or (isinstance(a, LoopIndex) and a.name not in self.enclosing)
        )

    def refine(self, c, positive: bool, p: _Path) -> None:
        if isinstance(c, BoolOp):
            if c.op == "!":
                self.refine(c.operands[0], not positive, p)
            elif (c.op == "&&") == positive:
                for o in c.operands:
                    self.refine(o, positive, p)
            return
        if not isinstance(c, Compare):
            return
        left = self.value(c.left, p, record=False)
        right = self.value(c.right, p, record=False)
        op = c.op
        i = idx(self.loop.var)
        if right == i and left != i:
            left, right = right, left
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}[op]
        if left != i or not self._invariant(right):
            return
        if not positive:
            op = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}[op]
        lo, hi = p.lo, p.hi
        if op in ("==", ">=", ">"):
            bound = right + (1 if op == ">" else 0)
            m = sym_max(lo, bound, self.asm)
            lo = m if not m.bottom else lo
        if op in ("==", "<=", "<"):
            bound = right - (1 if op == "<" else 0)
            m = sym_min(hi, bound, self.asm)
            hi = m if not m.bottom else hi
        if op == "!=":
            if holds(compare(right, lo, self.asm), "=="):
                lo = lo + 1
            elif holds(compare(right, hi, self.asm), "=="):
                hi = hi - 1
        p.lo, p.hi = lo, hi

    # statements ---------------------------------------------------------- #

    def block(self, stmts, paths: List[_Path], inner) -> List[_Path]:
        for s in stmts:
            paths = [q for p in paths for q in self.stmt(s, p, inner)]
            if len(paths) > MAX_PATHS:
                raise TooManyPaths()
        return paths

    def stmt(self, s, p: _Path, inner) -> List[_Path]:
        if isinstance(s, Assign):
            val = self.value(s.value, p, inner)
            t = s.target
            if isinstance(t, ScalarLV):
                p.env[t.name] = val
                p.defined.add(t.name)
            else:
                subs = [self.value(e, p, inner) for e in t.subscripts]
                self.record(p, t.name, "write", subs[0], s.line, inner)
            return [p]
        if isinstance(s, If):
            self.value(s.cond, p, inner)
            a, b = p, p.fork()
            a.guards = a.guards + (s.cond,)
            b.guards = b.guards + (BoolOp("!", (s.cond,)),)
            if not inner:
                self.refine(s.cond, True, a)
                self.refine(s.cond, False, b)
            out = self.block(s.then, [a], inner) + self.block(s.orelse, [b], inner)
            return [q for q in out if not holds(compare(q.hi, q.lo, self.asm), "<")]
        if isinstance(s, For):
            return [self.inner_loop(s, p, inner)]
        raise TypeError(f"unknown statement {s!r}")

    def inner_loop(self, s: For, p: _Path, inner) -> _Path:
        lo = self.value(s.lower, p, inner)
        hi = self.value(s.upper, p, inner) - 1
        body_written = written_scalars(s.body)
        entry = p.fork()
        entry.env[s.var] = idx(s.var)
        entry.defined.add(s.var)
        for x in body_written:
            # loop-carried values are unknown inside the body
            if x in p.defined or x in p.env:
                entry.env[x] = BOTTOM
        saved = self.enclosing
        self.enclosing = saved | {s.var}
        try:
            out = self.block(s.body, [entry], tuple(inner) + ((s.var, lo, hi),))
        finally:
            self.enclosing = saved
        for q in out:
            p.violations |= q.violations
            for acc in q.accesses[len(p.accesses):]:
                p.accesses.append(acc)
        for x in body_written | {s.var}:
            if x in p.defined or x == s.var:
                p.env[x] = BOTTOM
        return p


def _eliminate_inner(acc: Access) -> Access:
    lo, hi = acc.subscript, acc.subscript
    for name, a, b in reversed(acc.inner):
        binding = {LoopIndex(name): SymRange(a, b)}
        lo = substitute_ranges(lo, binding, False)
        hi = substitute_ranges(hi, binding, True)
    return Access(acc.array, acc.kind, acc.subscript, lo, hi, acc.line, acc.inner, acc.guards, acc.direct)


# --------------------------------------------------------------------------- #
# proofs
# --------------------------------------------------------------------------- #


def _at(e: SymExpr, var_name: str, value: SymExpr) -> SymExpr:
    return e.substitute({LoopIndex(var_name): value})


class _Prover:
    def __init__(self, asm: Assumptions, trace: List[ProofStep]):
        self.asm = asm
        self.trace = trace

    def check(self, a: SymExpr, want: str, b: SymExpr, asm: Optional[Assumptions] = None) -> bool:
        asm = asm or self.asm
        before = len(asm.used)
        rel = compare(a, b, asm)
        ok = holds(rel, want)
        used = [f.render() for f in asm.used[before:]]
        del asm.used[before:]
        self.trace.append(ProofStep(f"{a.render()} {want} {b.render()}", rel.value, used if ok else [], ok))
        return ok


def _with_index_range(asm: Assumptions, var_name: str, lo: SymExpr, hi: SymExpr) -> Assumptions:
    a = asm.extend({LoopIndex(var_name): SymRange(lo, hi)})
    a.used = []
    return a


def test_monotonic_ranges(segments: List[Segment], var_name: str, asm: Assumptions,
                          trace: List[ProofStep]) -> Tuple[bool, bool, str]:
    """Returns (proved, peeled, reason)."""
    i = idx(var_name)
    for seg in segments:
        for acc in seg.accesses:
            if acc.lo.bottom or acc.hi.bottom:
                return False, False, f"unresolvable bound for {acc.array} (line {acc.line})"
    within_ok = True
    for seg in segments:
        if seg.lo == seg.hi:
            continue
        sub = _with_index_range(asm, var_name, seg.lo, seg.hi - 1)
        prover = _Prover(sub, trace)
        for d in seg.accesses:
            for e in seg.accesses:
                if d.kind == "read" and e.kind == "read":
                    continue
                if not prover.check(d.hi, "<", _at(e.lo, var_name, i + 1)):
                    within_ok = False
            if not prover.check(d.lo, "<=", _at(d.lo, var_name, i + 1)):
                within_ok = False
    if not within_ok:
        return False, False, "per-iteration ranges not provably ordered"
    cross_ok = True
    first_cross_ok = True
    for k, (a, b) in enumerate(zip(segments, segments[1:])):
        prover = _Prover(_with_index_range(asm, var_name, a.lo, b.hi), trace)
        ok = True
        for d in a.accesses:
            for e in b.accesses:
                if d.kind == "read" and e.kind == "read":
                    continue
                if not prover.check(_at(d.hi, var_name, a.hi), "<", _at(e.lo, var_name, b.lo)):
                    ok = False
        for e in b.accesses:
            if a.accesses and not any(
                prover.check(_at(d.lo, var_name, a.hi), "<=", _at(e.lo, var_name, b.lo)) for d in a.accesses
            ):
                ok = False
        if not ok:
            cross_ok = False
            if k == 0:
                first_cross_ok = False
            else:
                return False, False, "ranges of adjacent index segments not provably ordered"
    if cross_ok:
        return True, False, ""
    if not first_cross_ok and segments[0].lo == segments[0].hi:
        return True, True, ""
    return False, False, "ranges of adjacent index segments not provably ordered"


def _injective_form(sub: SymExpr, var_name: str, invariant) -> Optional[Tuple[Elem, SymExpr]]:
    """Match ``c*b[i+k] + d``; returns (atom, k) or None."""
    elems = [(m[0], c) for m, c in sub.terms if len(m) == 1 and isinstance(m[0], Elem)]
    if len(elems) != 1 or elems[0][1] == 0:
        return None
    atom, _ = elems[0]
    rest = sub.without(atom)
    if not invariant(rest) or rest.mentions(lambda a: isinstance(a, Elem) and a == atom):
        return None
    index = atom.index
    if index.coeff(LoopIndex(var_name)) != 1:
        return None
    k = index.without(LoopIndex(var_name))
    if not k.is_literal:
        return None
    return atom, k


def test_injective_write(accesses: List[Access], var_name: str, lower: SymExpr, upper: SymExpr,
                         asm: Assumptions, facts: Sequence[FactEntry], invariant,
                         trace: List[ProofStep]) -> Tuple[bool, str]:
    writes = [a for a in accesses if a.kind == "write"]
    if any(a.inner for a in accesses):
        return False, "reference inside an inner loop"
    subs = {a.subscript for a in accesses}
    if len(subs) != 1:
        return False, "references use different subscripts"
    sub = next(iter(subs))
    m = _injective_form(sub, var_name, invariant)
    if m is None or not writes:
        return False, "subscript is not of the form c*b[i+k]+d"
    atom, k = m
    need = SymRange(lower + k, upper - 1 + k)
    prover = _Prover(asm, trace)
    weak = False
    for f in facts:
        if f.array != atom.array or f.prop is None:
            continue
        if not f.implies_injective:
            weak = weak or f.prop.is_monotonic
            continue
        covered = f.element_range()
        if prover.check(covered.lo, "<=", need.lo) and prover.check(need.hi, "<=", covered.hi):
            trace.append(ProofStep(f"{atom.array} injective over [{need.lo.render()}:{need.hi.render()}]",
                                   "Proved", [f.render()]))
            return True, ""
    if weak:
        return False, "non-strict not injective"
    return False, f"no injectivity fact for {atom.array}"


# --------------------------------------------------------------------------- #
# reasons for failure
# --------------------------------------------------------------------------- #


def _elem_arrays(e: SymExpr) -> set:
    return {a.array for a in e.all_atoms() if isinstance(a, Elem)}


def _nested(e: SymExpr) -> bool:
    return any(isinstance(a, Elem) and a.index.mentions(lambda b: isinstance(b, Elem)) for a in e.atoms())


def classify_failure(array: str, accesses: List[Access], collector: "_Collector", detail: str) -> str:
    writes = [a for a in accesses if a.kind == "write"]
    for w in writes:
        sub_arrays = _elem_arrays(w.subscript)
        for g in w.guards:
            from .frontend.ast import read_arrays

            if read_arrays(g) & sub_arrays:
                return "no inference rule for subset injectivity (guarded subscript array)"
    for w in writes:
        if w.inner and any(_elem_arrays(lo) | _elem_arrays(hi) for _, lo, hi in w.inner):
            inner_vars = {n for n, _, _ in w.inner}
            if any(
                isinstance(a, Elem) and a.index.mentions(lambda b: isinstance(b, LoopIndex) and b.name in inner_vars)
                for a in w.subscript.atoms()
            ):
                return "no inference rule for simultaneous monotonicity and injectivity"
    for w in writes:
        if _nested(w.subscript):
            return "no inference rule for simultaneous injectivity (multi-level indirection)"
    by_line: Dict[int, set] = {}
    for w in writes:
        by_line.setdefault(w.line, set()).add(w.subscript)
    if any(len(v) > 1 for v in by_line.values()):
        return "no inference rule for disjoint injective expressions"
    for acc in accesses:
        for bound in (acc.lo, acc.hi):
            if acc.inner and _has_array_difference(bound):
                return "no inference rule for monotonic difference between arrays"
    for acc in accesses:
        for _, lo, hi in acc.inner:
            if _has_array_difference(lo) or _has_array_difference(hi):
                return "no inference rule for monotonic difference between arrays"
    index_arrays = sorted(set().union(*(_elem_arrays(a.subscript) for a in writes))) if writes else []
    if index_arrays:
        return f"no property fact for index array {', '.join(index_arrays)}: {detail}"
    return detail


def _has_array_difference(e: SymExpr) -> bool:
    pos = {m[0].array for m, c in e.terms if len(m) == 1 and isinstance(m[0], Elem) and c > 0}
    neg = {m[0].array for m, c in e.terms if len(m) == 1 and isinstance(m[0], Elem) and c < 0}
    return any(a != b for a in pos for b in neg)


# --------------------------------------------------------------------------- #
# liveness after the loop
# --------------------------------------------------------------------------- #


def _scan(stmts, x: str, stop) -> Optional[bool]:
    """True: ``x`` may be read before written; False: surely overwritten first; None: neither."""
    for s in stmts:
        if s is stop:
            return False
        if isinstance(s, Assign):
            if x in read_names(s.value) or (
                isinstance(s.target, ArrayLV) and any(x in read_names(e) for e in s.target.subscripts)
            ):
                return True
            if isinstance(s.target, ScalarLV) and s.target.name == x:
                return False
        elif isinstance(s, If):
            if x in read_names(s.cond):
                return True
            a, b = _scan(s.then, x, stop), _scan(s.orelse, x, stop)
            if a or b:
                return True
            if a is False and b is False:
                return False
        elif isinstance(s, For):
            if x in read_names(s.lower):
                return True
            if s.var == x:
                return False
            if x in read_names(s.bound) or _scan(s.body, x, stop):
                return True
    return None


def _find_path(stmts, target: For, path=()):
    """Chain of (block, position) pairs from the program body to ``target``."""
    for pos, s in enumerate(stmts):
        if s is target:
            return path + ((stmts, pos, None),)
        if isinstance(s, For):
            r = _find_path(s.body, target, path + ((stmts, pos, s),))
            if r:
                return r
        elif isinstance(s, If):
            for blk in (s.then, s.orelse):
                r = _find_path(blk, target, path + ((stmts, pos, s),))
                if r:
                    return r
    return None


def live_after(program: Program, loop: For, x: str) -> bool:
    """May ``x`` be read after ``loop`` before being overwritten?"""
    chain = _find_path(program.body, loop)
    if chain is None:
        return True

    def scan(stmts) -> Optional[bool]:
        return _scan(stmts, x, loop)

    for depth in range(len(chain) - 1, -1, -1):
        stmts, pos, _ = chain[depth]
        r = scan(stmts[pos + 1:])
        if r is not None:
            return r
        # the enclosing statement: a loop runs its body again
        if depth > 0:
            owner = chain[depth - 1][2]
            if isinstance(owner, For):
                if owner.var == x:
                    return True
                r = scan(owner.body)
                if r is not None:
                    return r
    return False


# --------------------------------------------------------------------------- #
# driver
# --------------------------------------------------------------------------- #


def enclosing_loops(program: Program, loop: For) -> List[For]:
    chain = _find_path(program.body, loop) or ()
    return [owner for _, _, owner in chain if isinstance(owner, For)]


def collect_accesses(loop: For, program: Program, facts: Sequence[FactEntry] = (),
                     entry: Optional[Dict[str, SymRange]] = None) -> Tuple[List[_Path], "_Collector"]:
    """Enumerate the paths of one iteration of ``loop`` with their array accesses."""
    enclosing = [lp.var for lp in enclosing_loops(program, loop)]
    entry = dict(entry or {})
    params = frozenset(program.params)
    ranges = {BigLam(x): r for x, r in entry.items() if not r.is_bottom}
    asm = Assumptions(params, ranges, tuple(facts))
    tmp = _Collector(loop, program, enclosing, entry, asm, BOTTOM, BOTTOM)
    start = _Path({}, set(), BOTTOM, BOTTOM)
    lower = tmp.value(loop.lower, start, record=False)
    upper = tmp.value(loop.upper, start, record=False)
    col = _Collector(loop, program, enclosing, entry, asm, lower, upper)
    p = _Path({}, set(), lower, upper - 1)
    paths = col.block(loop.body, [p], ())
    for q in paths:
        q.accesses = [_eliminate_inner(a) for a in q.accesses]
    return paths, col


def _segments(paths: List[_Path], array: str, col: _Collector) -> List[Segment]:
    groups: Dict[Tuple[SymExpr, SymExpr], Segment] = {}
    for p in paths:
        key = (p.lo, p.hi)
        seg = groups.setdefault(key, Segment(p.lo, p.hi))
        seg.accesses.extend(a for a in p.accesses if a.array == array)
    ordered = _order_segments(list(groups.values()), col)
    if ordered is None:
        merged = Segment(col.lower, col.upper - 1)
        for s in groups.values():
            merged.accesses.extend(a for a in s.accesses if a not in merged.accesses)
        return [merged]
    return ordered


def _order_segments(segs: List[Segment], col: _Collector) -> Optional[List[Segment]]:
    if len(segs) == 1:
        return segs if segs[0].lo == col.lower and segs[0].hi == col.upper - 1 else None
    out = []
    want = col.lower
    pool = list(segs)
    while pool:
        nxt = [s for s in pool if s.lo == want]
        if len(nxt) != 1:
            return None
        s = nxt[0]
        pool.remove(s)
        # only the last segment may be empty: borders are checked between
        # neighbours, so an empty middle segment would hide one
        last = s.hi + 1 if not pool else s.hi
        if not holds(compare(s.lo, last, col.asm), "<="):
            return None
        out.append(s)
        want = s.hi + 1
    if out[-1].hi != col.upper - 1:
        return None
    return out


def classify_loop(loop: For, program: Program, facts: Sequence[FactEntry] = (),
                  entry: Optional[Dict[str, SymRange]] = None) -> Verdict:
    """Decide whether the iterations of ``loop`` are independent."""
    verdict = Verdict(loop.loop_id, Decision.UNKNOWN.value)
    try:
        paths, col = collect_accesses(loop, program, facts, entry)
    except TooManyPaths:
        verdict.reason = f"more than {MAX_PATHS} paths through the loop body"
        return verdict
    trace = verdict.trace
    var_name = loop.var
    private = sorted(written_scalars(loop.body) - {var_name})
    verdict.private = private

    def invariant(e: SymExpr) -> bool:
        return col._invariant(e) and not e.mentions(
            lambda a: isinstance(a, Elem) and a.array in col.written_arr
        )

    # a demonstrated conflict: an unconditional write to one fixed location
    n = col.upper - col.lower
    for p in paths:
        for acc in p.accesses:
            if acc.kind == "write" and acc.direct and invariant(acc.subscript) and not col.lower.bottom:
                if all(any(b.kind == "write" and b.line == acc.line and b.subscript == acc.subscript
                           and b.direct for b in q.accesses) for q in paths) and holds(compare(2, n, col.asm), "<="):
                    verdict.decision = Decision.SERIAL.value
                    verdict.reason = f"every iteration writes {acc.array}[{acc.subscript.render()}]"
                    verdict.witness = {
                        "array": acc.array,
                        "location": acc.subscript.render(),
                        "iterations": [col.lower.render(), (col.lower + 1).render()],
                        "line": acc.line,
                    }
                    return verdict

    violations = sorted(set().union(*(p.violations for p in paths)))
    if violations:
        verdict.reason = f"scalar {', '.join(violations)} may be read before it is written in an iteration"
        return verdict
    for x in private + [var_name]:
        if live_after(program, loop, x):
            verdict.reason = f"scalar {x} is live after the loop"
            return verdict

    arrays = []
    for p in paths:
        for acc in p.accesses:
            if acc.kind == "write" and acc.array not in arrays:
                arrays.append(acc.array)
    rules: Dict[str, str] = {}
    for array in arrays:
        accs = [a for p in paths for a in p.accesses if a.array == array]
        ok, why_inj = test_injective_write(accs, var_name, col.lower, col.upper, col.asm, facts, invariant, trace)
        if ok:
            rules[array] = "InjectiveWrite"
            continue
        segs = _segments(paths, array, col)
        ok, peeled, why = test_monotonic_ranges(segs, var_name, col.asm, trace)
        if ok:
            rules[array] = "MonotonicRanges"
            verdict.peeled = verdict.peeled or peeled
            continue
        verdict.rules = rules
        detail = why if why_inj.startswith("subscript") or why_inj.startswith("reference") else why_inj
        verdict.reason = f"{array}: " + classify_failure(array, accs, col, detail)
        return verdict
    verdict.decision = Decision.PARALLEL.value
    verdict.rules = rules
    verdict.rule = next(iter(rules.values()), None)
    return verdict
