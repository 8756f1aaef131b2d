"""Concrete reference interpreter and brute-force checkers.

Programs are compiled to Python source once and executed with C semantics:
64-bit integers with trapped overflow, bounds-checked subscripts (negative
ones included) and zero-filled memory unless ``uninit="error"``.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

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
)
from .symbolic import BigLam, Elem, Lam, LoopIndex, Property, SymExpr, SymRange, Var

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1


class OracleError(Exception):
    """Trapped runtime error: out-of-bounds access, overflow, uninitialised read."""


@dataclass
class Machine:
    params: Dict[str, int]
    memory: Dict[str, object]
    trace: List[tuple] = field(default_factory=list)


# --------------------------------------------------------------------------- #
# runtime helpers used by generated code
# --------------------------------------------------------------------------- #


def _ix(i, n, name):
    if i is None:
        raise OracleError(f"uninitialised value used as subscript of {name}")
    if i < 0 or i >= n:
        raise OracleError(f"out-of-bounds access {name}[{i}] (size {n})")
    return i


def _st(v, name):
    if v is None:
        raise OracleError(f"uninitialised value stored to {name}")
    if isinstance(v, int) and not INT_MIN <= v <= INT_MAX:
        raise OracleError(f"integer overflow storing to {name}")
    return v


def _rd(v, name):
    if v is None:
        raise OracleError(f"uninitialised read of {name}")
    return v


# --------------------------------------------------------------------------- #
# code generation
# --------------------------------------------------------------------------- #


class _Gen:
    def __init__(self, program: Program, traced: frozenset, hooked: bool, checked_reads: bool):
        self.p = program
        self.traced = traced
        self.hooked = hooked
        self.checked = checked_reads
        self.lines: List[str] = []
        self.active: List[Tuple[str, str]] = []  # enclosing traced loops: (loop id, var)

    def emit(self, text: str, depth: int) -> None:
        self.lines.append("    " * depth + text)

    def expr(self, e) -> str:
        if isinstance(e, Num):
            return str(e.value)
        if isinstance(e, Name):
            if e.id in self.p.params:
                return f"P[{e.id!r}]"
            return f"_rd(v_{e.id}, {e.id!r})" if self.checked else f"v_{e.id}"
        if isinstance(e, Index):
            s = self.access(e.array, e.subscripts)
            self.reads.append((e.array, e.subscripts))
            return f"_rd({s}, {e.array!r})" if self.checked else s
        if isinstance(e, BinOp):
            return f"({self.expr(e.left)} {e.op} {self.expr(e.right)})"
        if isinstance(e, Neg):
            return f"(-{self.expr(e.operand)})"
        if isinstance(e, Compare):
            return f"({self.expr(e.left)} {e.op} {self.expr(e.right)})"
        if isinstance(e, BoolOp):
            if e.op == "!":
                return f"(not {self.expr(e.operands[0])})"
            op = " and " if e.op == "&&" else " or "
            return "(" + op.join(self.expr(o) for o in e.operands) + ")"
        raise TypeError(f"not an expression: {e!r}")

    def access(self, name: str, subs) -> str:
        out = f"v_{name}"
        for k, s in enumerate(subs):
            out += f"[_ix({self.expr(s)}, n_{name}_{k}, {name!r})]"
        return out

    def trace_reads(self, depth: int) -> None:
        if not self.active:
            self.reads = []
            return
        for name, subs in self.reads:
            if len(subs) != 1:
                continue
            self.emit(f"_t = {self.expr_plain(subs[0])}", depth)
            for lid, v in self.active:
                self.emit(f"T.append(({lid!r}, _inst[{lid!r}], v_{v}, {name!r}, _t, 'r'))", depth)
        self.reads = []

    def expr_plain(self, e) -> str:
        saved = self.reads
        self.reads = []
        try:
            return self.expr(e)
        finally:
            self.reads = saved

    def block(self, stmts, depth: int, top: bool = False) -> None:
        if not stmts:
            self.emit("pass", depth)
        for n, s in enumerate(stmts):
            self.stmt(s, depth)
            if top and self.hooked:
                self.emit(f"_h('stmt', {n + 1}, locals())", depth)

    def stmt(self, s, depth: int) -> None:
        self.reads = []
        if isinstance(s, Assign):
            val = self.expr(s.value)
            t = s.target
            if isinstance(t, ArrayLV):
                target = self.access(t.name, t.subscripts)
            else:
                target = f"v_{t.name}"
            self.trace_reads(depth)
            name = t.name
            if isinstance(t, ArrayLV) and self.active and len(t.subscripts) == 1:
                self.emit(f"_t = {self.expr_plain(t.subscripts[0])}", depth)
                for lid, v in self.active:
                    self.emit(f"T.append(({lid!r}, _inst[{lid!r}], v_{v}, {name!r}, _t, 'w'))", depth)
            self.emit(f"{target} = _st({val}, {name!r})", depth)
        elif isinstance(s, If):
            cond = self.expr(s.cond)
            self.trace_reads(depth)
            self.emit(f"if {cond}:", depth)
            self.block(s.then, depth + 1)
            if s.orelse:
                self.emit("else:", depth)
                self.block(s.orelse, depth + 1)
        elif isinstance(s, For):
            lid = s.loop_id
            lo, hi = self.expr(s.lower), self.expr(s.upper)
            self.trace_reads(depth)
            self.emit(f"_lo{depth} = {lo}", depth)
            self.emit(f"_hi{depth} = {hi}", depth)
            if lid in self.traced:
                self.emit(f"_inst[{lid!r}] = _inst.get({lid!r}, -1) + 1", depth)
            if self.hooked:
                self.emit(f"v_{s.var} = _lo{depth}", depth)
                self.emit(f"_h('enter', {lid!r}, locals())", depth)
            self.emit(f"for v_{s.var} in range(_lo{depth}, _hi{depth}):", depth)
            if self.hooked:
                self.emit(f"_h('iter', {lid!r}, locals())", depth + 1)
            pushed = lid in self.traced
            if pushed:
                self.active.append((lid, s.var))
            self.block(s.body, depth + 1)
            if pushed:
                self.active.pop()
            if self.hooked:
                self.emit(f"_h('iter_end', {lid!r}, locals())", depth + 1)
            self.emit("else:", depth)
            self.emit(f"v_{s.var} = max(_lo{depth}, _hi{depth})", depth + 1)
            if self.hooked:
                self.emit(f"_h('exit', {lid!r}, locals())", depth)
        else:
            raise TypeError(f"unknown statement {s!r}")

    def source(self) -> str:
        p = self.p
        self.emit("def _run(P, M, T, _h):", 0)
        self.emit("_inst = {}", 1)
        for d in p.decls:
            if d.kind == "param":
                continue
            self.emit(f"v_{d.name} = M[{d.name!r}]", 1)
            if d.rank:
                self.emit(f"n_{d.name}_0 = len(v_{d.name})", 1)
            if d.rank == 2:
                self.emit(f"n_{d.name}_1 = len(v_{d.name}[0]) if v_{d.name} else 0", 1)
        self.block(p.body, 1, top=True)
        for d in p.decls:
            if d.kind != "param" and d.rank == 0:
                self.emit(f"M[{d.name!r}] = v_{d.name}", 1)
        self.emit("return M", 1)
        return "\n".join(self.lines) + "\n"


@functools.lru_cache(maxsize=64)
def _compile(program: Program, traced: frozenset, hooked: bool, checked: bool):
    src = _Gen(program, traced, hooked, checked).source()
    namespace = {"_ix": _ix, "_st": _st, "_rd": _rd}
    exec(compile(src, f"<oracle:{program.filename}>", "exec"), namespace)
    return namespace["_run"]


def python_source(program: Program, trace: Iterable[str] = (), hooked: bool = False) -> str:
    """The generated Python for ``program`` (for debugging)."""
    return _Gen(program, frozenset(trace), hooked, False).source()


# --------------------------------------------------------------------------- #
# memory layout
# --------------------------------------------------------------------------- #


def eval_const(e, params: Dict[str, int]) -> int:
    """Evaluate a param-only expression (array extents, loop bounds)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        return params[e.id]
    if isinstance(e, Neg):
        return -eval_const(e.operand, params)
    if isinstance(e, BinOp):
        a, b = eval_const(e.left, params), eval_const(e.right, params)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    raise ValueError(f"not a constant expression: {e!r}")


def shapes(program: Program, params: Dict[str, int]) -> Dict[str, Tuple[int, ...]]:
    return {
        d.name: tuple(eval_const(x, params) for x in d.extents)
        for d in program.decls
        if d.kind != "param"
    }


def fresh_memory(program: Program, params: Dict[str, int], uninit: str = "zero",
                 initial: Optional[Dict[str, object]] = None) -> Dict[str, object]:
    fill = None if uninit == "error" else 0
    mem: Dict[str, object] = {}
    initial = initial or {}
    for name, shape in shapes(program, params).items():
        decl = program.decl(name)
        zero = fill if fill is None else (0.0 if decl.kind == "float" else 0)
        if name in initial:
            v = initial[name]
            if len(shape) == 2:
                mem[name] = [list(row) for row in v]
            elif len(shape) == 1:
                mem[name] = list(v)
            else:
                mem[name] = v
            if len(shape) >= 1 and len(mem[name]) != shape[0]:
                raise OracleError(f"initial value of {name} has length {len(mem[name])}, expected {shape[0]}")
            continue
        if len(shape) == 0:
            mem[name] = zero
        elif len(shape) == 1:
            mem[name] = [zero] * max(shape[0], 0)
        else:
            mem[name] = [[zero] * max(shape[1], 0) for _ in range(max(shape[0], 0))]
    return mem


def interpret(program: Program, params: Dict[str, int], memory: Optional[Dict[str, object]] = None,
              trace: Iterable[str] = (), hook: Optional[Callable] = None, uninit: str = "zero") -> Machine:
    """Run ``program``; ``trace`` lists loop ids whose array accesses are recorded.

    Trace entries are ``(loop_id, instance, iteration, array, index, kind)``
    with ``kind`` ``'r'`` or ``'w'``; ``iteration`` is the loop index value.
    ``hook(event, where, frame)`` is called with events ``stmt`` (after
    each top-level statement), ``enter``/``iter``/``iter_end``/``exit``;
    ``frame`` maps ``v_<name>`` to current values.
    """
    missing = [p for p in program.params if p not in params]
    if missing:
        raise OracleError(f"unbound params: {', '.join(missing)}")
    for p in program.params:
        if params[p] < 0:
            raise OracleError(f"param {p} must be non-negative")
    mem = fresh_memory(program, params, uninit, memory)
    run = _compile(program, frozenset(trace), hook is not None, uninit == "error")
    T: List[tuple] = []
    try:
        run(dict(params), mem, T, hook or (lambda *a: None))
    except TypeError as exc:  # arithmetic on None
        raise OracleError(f"uninitialised read ({exc})") from None
    except IndexError as exc:
        raise OracleError(f"out-of-bounds access ({exc})") from None
    return Machine(dict(params), mem, T)


def frame_values(frame: Dict[str, object]) -> Dict[str, object]:
    """Strip the ``v_`` prefix of generated locals."""
    return {k[2:]: v for k, v in frame.items() if k.startswith("v_")}


# --------------------------------------------------------------------------- #
# input generation
# --------------------------------------------------------------------------- #

DENSITIES = (0.0, 0.01, 0.3, 1.0)


@dataclass
class InputGenerator:
    """Deterministic inputs driven by ``//@param`` and ``//@gen`` directives.

    ``//@param NAME LO HI`` bounds a parameter (default 1..200).
    ``//@gen NAME KIND ARGS`` picks the initial contents of an array:
    ``sparse``, ``uniform LO HI``, ``perm [OFFSET]``, ``partial_perm``,
    ``monotone MAXSTEP [START]``, ``zeros`` or ``const V``.  Arrays without
    a directive get ``sparse`` (2-D) or ``uniform 0 9`` (1-D); scalars are 0.
    """

    seed: int = 0
    default_range: Tuple[int, int] = (1, 200)

    def directives(self, program: Program):
        ranges, gens = {}, {}
        for d in program.directives:
            parts = d.split()
            if parts[0] == "param" and len(parts) == 4:
                lo, hi = int(parts[2]), int(parts[3])
                if not 1 <= lo <= hi:
                    # the analysis assumes every param is a positive integer
                    raise OracleError(f"bad range for param {parts[1]}: need 1 <= LO <= HI")
                ranges[parts[1]] = (lo, hi)
            elif parts[0] == "gen" and len(parts) >= 3:
                gens[parts[1]] = parts[2:]
        return ranges, gens

    def rng(self, trial: int) -> random.Random:
        return random.Random(f"indexprop:{self.seed}:{trial}")

    def params(self, program: Program, trial: int, overrides: Optional[Dict[str, int]] = None) -> Dict[str, int]:
        ranges, _ = self.directives(program)
        rng = self.rng(trial)
        out = {}
        for p in program.params:
            lo, hi = ranges.get(p, self.default_range)
            if trial == 0:
                out[p] = lo
            elif trial == 1:
                out[p] = hi
            else:
                out[p] = rng.randint(lo, hi)
        out.update(overrides or {})
        return out

    def density(self, trial: int) -> float:
        return 0.0 if trial == 0 else DENSITIES[trial % len(DENSITIES)]

    def generate(self, program: Program, trial: int,
                 overrides: Optional[Dict[str, int]] = None) -> Tuple[Dict[str, int], Dict[str, object]]:
        params = self.params(program, trial, overrides)
        _, gens = self.directives(program)
        rng = self.rng(trial * 7919 + 1)
        density = self.density(trial)
        mem: Dict[str, object] = {}
        for name, shape in shapes(program, params).items():
            if not shape:
                continue
            decl = program.decl(name)
            kind = gens.get(name) or (["sparse"] if len(shape) == 2 else ["uniform", "0", "9"])
            if len(shape) == 2:
                rows, cols = shape
                mem[name] = [self._fill(kind, cols, rng, density) for _ in range(rows)]
            else:
                mem[name] = self._fill(kind, shape[0], rng, density)
            if decl.kind == "float":
                mem[name] = _to_float(mem[name])
        return params, mem

    def _fill(self, kind: Sequence[str], n: int, rng: random.Random, density: float) -> list:
        k, args = kind[0], [int(a) for a in kind[1:]]
        if k == "sparse":
            return [rng.randint(1, 9) if rng.random() < density else 0 for _ in range(n)]
        if k == "uniform":
            lo, hi = args if args else (0, 9)
            return [rng.randint(lo, hi) for _ in range(n)]
        if k == "perm":
            off = args[0] if args else 0
            vals = list(range(off, off + n))
            rng.shuffle(vals)
            return vals
        if k == "partial_perm":
            vals = list(range(n))
            rng.shuffle(vals)
            return [v if rng.random() >= 0.3 else -1 for v in vals]
        if k == "monotone":
            step = args[0] if args else 1
            cur = args[1] if len(args) > 1 else 0
            out = []
            for _ in range(n):
                out.append(cur)
                if density > 0:
                    cur += rng.randint(0, step)
            return out
        if k == "zeros":
            return [0] * n
        if k == "const":
            return [args[0]] * n
        raise ValueError(f"unknown generator kind {k!r}")


def _to_float(v):
    if isinstance(v, list):
        return [_to_float(x) for x in v]
    return float(v)


# --------------------------------------------------------------------------- #
# checkers
# --------------------------------------------------------------------------- #


def check_property(values: Sequence[int], lo: int, hi: int, prop: Property) -> Optional[Tuple[int, int]]:
    """Check ``prop`` on ``values[lo..hi]`` (inclusive element range).

    Returns None when it holds, else the lexicographically smallest
    violating index pair ``(i, j)`` with ``i <= j``.
    """
    if hi < lo:
        return None
    if lo < 0 or hi >= len(values):
        raise OracleError(f"range [{lo}:{hi}] outside array of length {len(values)}")
    if prop is Property.Identity:
        for i in range(lo, hi + 1):
            if values[i] != i:
                return (i, i)
        return None
    if prop is Property.Injective:
        first_later: Dict[int, int] = {}
        best = None
        for i in range(hi, lo - 1, -1):
            v = values[i]
            if v in first_later:
                best = (i, first_later[v])
            first_later[v] = i
        return best
    # monotonic variants: smallest i having some later j out of order
    bad = {
        Property.Monotonic_inc: lambda a, b: b < a,
        Property.StrictMonotonic_inc: lambda a, b: b <= a,
        Property.Monotonic_dec: lambda a, b: b > a,
        Property.StrictMonotonic_dec: lambda a, b: b >= a,
    }[prop]
    inc = prop.increasing
    # suffix extreme: the element most likely to violate against values[i]
    ext = [None] * (hi - lo + 2)
    for t in range(hi, lo - 1, -1):
        cur = values[t]
        nxt = ext[t - lo + 1]
        ext[t - lo] = cur if nxt is None else (min(cur, nxt) if inc else max(cur, nxt))
    for i in range(lo, hi):
        if bad(values[i], ext[i - lo + 1]):
            for j in range(i + 1, hi + 1):
                if bad(values[i], values[j]):
                    return (i, j)
    return None


def check_value_range(values: Sequence[int], lo: int, hi: int, vlo, vhi) -> Optional[int]:
    """First index in ``[lo:hi]`` whose value lies outside ``[vlo:vhi]``."""
    if hi < lo:
        return None
    if lo < 0 or hi >= len(values):
        raise OracleError(f"range [{lo}:{hi}] outside array of length {len(values)}")
    for i in range(lo, hi + 1):
        if not vlo <= values[i] <= vhi:
            return i
    return None


@dataclass(frozen=True)
class Conflict:
    iter1: int
    iter2: int
    array: str
    index: int
    instance: int = 0
    kind: str = "output"

    def __str__(self) -> str:
        return f"{self.kind} conflict on {self.array}[{self.index}] between iterations {self.iter1} and {self.iter2}"


def _conflicts(trace: Iterable[tuple], loop_id: str, with_reads: bool, skip_first: bool = False) -> Optional[Conflict]:
    writes: Dict[tuple, int] = {}
    reads: Dict[tuple, set] = {}
    first: Dict[int, int] = {}
    best = None
    for lid, inst, it, arr, index, kind in trace:
        if lid != loop_id:
            continue
        first.setdefault(inst, it)
        if skip_first and it == first[inst]:
            continue
        key = (inst, arr, index)
        if kind == "w":
            prev = writes.get(key)
            if prev is not None and prev != it:
                c = Conflict(min(prev, it), max(prev, it), arr, index, inst)
                best = c if best is None else min(best, c, key=_ckey)
            writes.setdefault(key, it)
            if with_reads:
                for r in reads.get(key, ()):
                    if r != it:
                        c = Conflict(min(r, it), max(r, it), arr, index, inst, "flow/anti")
                        best = c if best is None else min(best, c, key=_ckey)
        elif with_reads:
            reads.setdefault(key, set()).add(it)
            prev = writes.get(key)
            if prev is not None and prev != it:
                c = Conflict(min(prev, it), max(prev, it), arr, index, inst, "flow/anti")
                best = c if best is None else min(best, c, key=_ckey)
    return best


def _ckey(c: Conflict):
    return (c.instance, c.iter1, c.iter2, c.array, c.index)


def check_output_independence(program: Program, loop_id: str, params: Dict[str, int],
                              memory: Optional[Dict[str, object]] = None, skip_first: bool = False) -> Optional[Conflict]:
    """None when no location is written in two distinct iterations of the loop."""
    program.loop(loop_id)
    m = interpret(program, params, memory, trace=(loop_id,))
    return _conflicts(m.trace, loop_id, False, skip_first)


def check_iteration_independence(program: Program, loop_id: str, params: Dict[str, int],
                                 memory: Optional[Dict[str, object]] = None,
                                 skip_first: bool = False) -> Optional[Conflict]:
    """Like :func:`check_output_independence` but also flags a location
    written in one iteration and read in another."""
    program.loop(loop_id)
    m = interpret(program, params, memory, trace=(loop_id,))
    return _conflicts(m.trace, loop_id, True, skip_first)


# --------------------------------------------------------------------------- #
# evaluating symbolic results on concrete states
# --------------------------------------------------------------------------- #


def evaluate(e: SymExpr, params: Dict[str, int], values: Optional[Dict[str, object]] = None,
             lam: Optional[Dict[str, object]] = None, big: Optional[Dict[str, object]] = None,
             elem_memory: Optional[Dict[str, object]] = None):
    """Value of ``e`` given params, loop indices (``values``), λ and Λ bindings."""
    values = values or {}

    def lookup(a):
        if isinstance(a, Var):
            return params[a.name]
        if isinstance(a, LoopIndex):
            return values[a.name]
        if isinstance(a, Lam):
            return lam[a.name]
        if isinstance(a, BigLam):
            return big[a.name]
        if isinstance(a, Elem):
            i = evaluate(a.index, params, values, lam, big, elem_memory)
            arr = (elem_memory or values)[a.array]
            if i < 0 or i >= len(arr):
                raise OracleError(f"{a.array}[{i}] out of bounds while evaluating a bound")
            return arr[i]
        raise KeyError(a)

    return e.evaluate(lookup)


def in_range(v, r: SymRange, **kw) -> bool:
    if r.is_bottom:
        return True
    return evaluate(r.lo, **kw) <= v <= evaluate(r.hi, **kw)
