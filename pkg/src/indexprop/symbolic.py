"""Symbolic integer expressions and may/must ranges.

Expressions are kept in a canonical polynomial form: a sorted tuple of
``(monomial, coefficient)`` pairs where a monomial is a sorted tuple of
atoms and the empty monomial carries the literal part.  Array elements such
as ``rowptr[i-1]`` are opaque atoms identified by array name and subscript.

``BOTTOM`` is the unknown value and absorbs every operation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

Number = Union[int, Fraction]


# --------------------------------------------------------------------------- #
# Atoms
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Var:
    """A program variable: a size parameter or a loop-invariant scalar."""

    name: str

    def sort_key(self):
        return (3, self.name, "")


@dataclass(frozen=True)
class LoopIndex:
    name: str

    def sort_key(self):
        return (2, self.name, "")


@dataclass(frozen=True)
class Lam:
    """Value of scalar ``name`` at the start of the current iteration."""

    name: str

    def sort_key(self):
        return (0, self.name, "")


@dataclass(frozen=True)
class BigLam:
    """Value of scalar ``name`` at loop entry."""

    name: str

    def sort_key(self):
        return (0, self.name, "~")


@dataclass(frozen=True)
class Elem:
    """Opaque array element ``array[index]``."""

    array: str
    index: "SymExpr"

    def sort_key(self):
        return (1, self.array, self.index.render())


Atom = Union[Var, LoopIndex, Lam, BigLam, Elem]
Monomial = Tuple[Atom, ...]


def _atom_key(a: Atom):
    return a.sort_key()


def _mono_key(m: Monomial):
    # linear terms first (ordered by atom), then higher degree, literal last
    if not m:
        return (2, ())
    return (0 if len(m) == 1 else 1, tuple(_atom_key(a) for a in m))


# --------------------------------------------------------------------------- #
# Expressions
# --------------------------------------------------------------------------- #


class SymExpr:
    """Immutable canonical polynomial over atoms, or bottom."""

    __slots__ = ("terms", "bottom", "_hash")

    def __init__(self, terms: Iterable[Tuple[Monomial, Number]] = (), bottom: bool = False):
        if bottom:
            self.terms: Tuple[Tuple[Monomial, Fraction], ...] = ()
            self.bottom = True
        else:
            acc: Dict[Monomial, Fraction] = {}
            for mono, coef in terms:
                if any(isinstance(a, Elem) and a.index.bottom for a in mono):
                    self.terms, self.bottom = (), True
                    break
                mono = tuple(sorted(mono, key=_atom_key))
                acc[mono] = acc.get(mono, Fraction(0)) + Fraction(coef)
            else:
                self.terms = tuple(
                    sorted(((m, c) for m, c in acc.items() if c != 0), key=lambda t: _mono_key(t[0]))
                )
                self.bottom = False
        self._hash = None

    # construction helpers ------------------------------------------------- #

    @classmethod
    def literal(cls, value: Number) -> "SymExpr":
        return cls((((), value),))

    @classmethod
    def atom(cls, a: Atom) -> "SymExpr":
        return cls((((a,), 1),))

    @staticmethod
    def coerce(x) -> "SymExpr":
        if isinstance(x, SymExpr):
            return x
        if isinstance(x, (int, Fraction)):
            return SymExpr.literal(x)
        if isinstance(x, (Var, LoopIndex, Lam, BigLam, Elem)):
            return SymExpr.atom(x)
        raise TypeError(f"cannot coerce {x!r} to SymExpr")

    # equality / hashing --------------------------------------------------- #

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymExpr.literal(other)
        if not isinstance(other, SymExpr):
            return NotImplemented
        return self.bottom == other.bottom and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.bottom, self.terms))
        return self._hash

    # arithmetic ----------------------------------------------------------- #

    def __add__(self, other):
        other = SymExpr.coerce(other)
        if self.bottom or other.bottom:
            return BOTTOM
        return SymExpr(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        if self.bottom:
            return BOTTOM
        return SymExpr((m, -c) for m, c in self.terms)

    def __sub__(self, other):
        return self + (-SymExpr.coerce(other))

    def __rsub__(self, other):
        return SymExpr.coerce(other) - self

    def __mul__(self, other):
        other = SymExpr.coerce(other)
        if self.bottom or other.bottom:
            return BOTTOM
        return SymExpr((m1 + m2, c1 * c2) for m1, c1 in self.terms for m2, c2 in other.terms)

    __rmul__ = __mul__

    # inspection ----------------------------------------------------------- #

    @property
    def const(self) -> Fraction:
        for m, c in self.terms:
            if not m:
                return c
        return Fraction(0)

    @property
    def is_literal(self) -> bool:
        return not self.bottom and all(not m for m, _ in self.terms)

    @property
    def value(self) -> Number:
        """Literal value (raises if not a literal)."""
        if not self.is_literal:
            raise ValueError(f"{self.render()} is not a literal")
        c = self.const
        return int(c) if c.denominator == 1 else c

    @property
    def is_linear(self) -> bool:
        return not self.bottom and all(len(m) <= 1 for m, _ in self.terms)

    def atoms(self) -> set:
        """Top-level atoms (not descending into element subscripts)."""
        return {a for m, _ in self.terms for a in m}

    def all_atoms(self) -> set:
        out = set()
        for a in self.atoms():
            out.add(a)
            if isinstance(a, Elem):
                out |= a.index.all_atoms()
        return out

    def coeff(self, a: Atom) -> Fraction:
        for m, c in self.terms:
            if m == (a,):
                return c
        return Fraction(0)

    def mentions(self, pred: Callable[[Atom], bool]) -> bool:
        return any(pred(a) for a in self.all_atoms())

    def without(self, a: Atom) -> "SymExpr":
        """Drop the linear term of atom ``a``."""
        return SymExpr((m, c) for m, c in self.terms if m != (a,))

    # substitution --------------------------------------------------------- #

    def substitute(self, binding: Mapping[Atom, "SymExpr"]) -> "SymExpr":
        """Simultaneous substitution of atoms, including inside subscripts."""
        if self.bottom:
            return BOTTOM
        result = SymExpr()
        for mono, coef in self.terms:
            term = SymExpr.literal(coef)
            for a in mono:
                term = term * _subst_atom(a, binding)
            result = result + term
        return result

    def evaluate(self, lookup: Callable[[Atom], Number]) -> Number:
        """Concrete value given atom values; ``lookup`` handles ``Elem``."""
        if self.bottom:
            raise ValueError("cannot evaluate bottom")
        total = Fraction(0)
        for mono, coef in self.terms:
            v = Fraction(coef)
            for a in mono:
                v *= lookup(a)
            total += v
        return int(total) if total.denominator == 1 else total

    # rendering ------------------------------------------------------------ #

    def render(self, owner: Optional[str] = None) -> str:
        if self.bottom:
            return "⊥"
        if not self.terms:
            return "0"
        parts = []
        for mono, coef in self.terms:
            body = "*".join(_render_power(mono, owner))
            mag = abs(coef)
            if not mono:
                txt = str(mag)
            elif mag == 1:
                txt = body
            else:
                txt = f"{mag}*{body}"
            sign = "-" if coef < 0 else "+"
            parts.append((sign, txt))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, txt in parts[1:]:
            out += sign + txt
        return out

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"SymExpr({self.render()})"


def _render_power(mono: Monomial, owner):
    out = []
    i = 0
    while i < len(mono):
        j = i
        while j < len(mono) and mono[j] == mono[i]:
            j += 1
        txt = render_atom(mono[i], owner)
        out.append(txt if j - i == 1 else f"{txt}^{j - i}")
        i = j
    return out


def render_atom(a: Atom, owner: Optional[str] = None) -> str:
    if isinstance(a, Lam):
        return "λ" if a.name == owner else f"λ({a.name})"
    if isinstance(a, BigLam):
        return "Λ" if a.name == owner else f"Λ({a.name})"
    if isinstance(a, Elem):
        return f"{a.array}[{a.index.render(owner)}]"
    return a.name


def _subst_atom(a: Atom, binding) -> SymExpr:
    if a in binding:
        return SymExpr.coerce(binding[a])
    if isinstance(a, Elem):
        idx = a.index.substitute(binding)
        if idx.bottom:
            return BOTTOM
        return SymExpr.atom(Elem(a.array, idx))
    return SymExpr.atom(a)


BOTTOM = SymExpr(bottom=True)


def lit(v: Number) -> SymExpr:
    return SymExpr.literal(v)


def var(name: str) -> SymExpr:
    return SymExpr.atom(Var(name))


def idx(name: str) -> SymExpr:
    return SymExpr.atom(LoopIndex(name))


def lam(name: str) -> SymExpr:
    return SymExpr.atom(Lam(name))


def big_lam(name: str) -> SymExpr:
    return SymExpr.atom(BigLam(name))


def elem(array: str, index) -> SymExpr:
    index = SymExpr.coerce(index)
    if index.bottom:
        return BOTTOM
    return SymExpr.atom(Elem(array, index))


def simplify(e: SymExpr) -> SymExpr:
    """Rebuild ``e`` in canonical form (identity on canonical input)."""
    if e.bottom:
        return BOTTOM
    return SymExpr(e.terms)


# --------------------------------------------------------------------------- #
# Ranges
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class SymRange:
    lo: SymExpr
    hi: SymExpr

    def __post_init__(self):
        if self.lo.bottom or self.hi.bottom:
            object.__setattr__(self, "lo", BOTTOM)
            object.__setattr__(self, "hi", BOTTOM)

    @classmethod
    def point(cls, e) -> "SymRange":
        e = SymExpr.coerce(e)
        return cls(e, e)

    @property
    def is_bottom(self) -> bool:
        return self.lo.bottom

    @property
    def is_point(self) -> bool:
        return not self.is_bottom and self.lo == self.hi

    def substitute(self, binding) -> "SymRange":
        return SymRange(self.lo.substitute(binding), self.hi.substitute(binding))

    def mentions(self, pred) -> bool:
        return self.lo.mentions(pred) or self.hi.mentions(pred)

    def render(self, owner: Optional[str] = None) -> str:
        if self.is_bottom:
            return "⊥"
        # factor a shared array-element part: rowptr[i-1]+[0:N]
        common = [
            (m, c)
            for m, c in self.lo.terms
            if len(m) == 1 and isinstance(m[0], Elem) and (m, c) in self.hi.terms
        ]
        if common:
            base = SymExpr(common)
            rest = SymRange(self.lo - base, self.hi - base)
            return f"{base.render(owner)}+{rest.render(owner)}"
        return f"[{self.lo.render(owner)}:{self.hi.render(owner)}]"

    def __str__(self):
        return self.render()


BOTTOM_RANGE = SymRange(BOTTOM, BOTTOM)


def as_range(x) -> SymRange:
    if isinstance(x, SymRange):
        return x
    return SymRange.point(x)


def range_add(a: SymRange, b: SymRange) -> SymRange:
    a, b = as_range(a), as_range(b)
    if a.is_bottom or b.is_bottom:
        return BOTTOM_RANGE
    return SymRange(a.lo + b.lo, a.hi + b.hi)


def range_neg(a: SymRange) -> SymRange:
    a = as_range(a)
    if a.is_bottom:
        return BOTTOM_RANGE
    return SymRange(-a.hi, -a.lo)


def range_sub(a: SymRange, b: SymRange) -> SymRange:
    return range_add(a, range_neg(b))


def range_scale(a: SymRange, k: Number) -> SymRange:
    a = as_range(a)
    if a.is_bottom:
        return BOTTOM_RANGE
    if k >= 0:
        return SymRange(a.lo * k, a.hi * k)
    return SymRange(a.hi * k, a.lo * k)


def range_mul(a: SymRange, b: SymRange) -> SymRange:
    """Product: exact for a literal factor or two points, otherwise bottom."""
    a, b = as_range(a), as_range(b)
    if a.is_bottom or b.is_bottom:
        return BOTTOM_RANGE
    if a.is_point and a.lo.is_literal:
        return range_scale(b, a.lo.value)
    if b.is_point and b.lo.is_literal:
        return range_scale(a, b.lo.value)
    if a.is_point and b.is_point:
        return SymRange.point(a.lo * b.lo)
    return BOTTOM_RANGE


def range_union(a: SymRange, b: SymRange, assumptions: "Optional[Assumptions]" = None) -> SymRange:
    """Smallest decidable hull of both ranges; bottom when min/max undecidable."""
    a, b = as_range(a), as_range(b)
    if a.is_bottom or b.is_bottom:
        return BOTTOM_RANGE
    lo = sym_min(a.lo, b.lo, assumptions)
    hi = sym_max(a.hi, b.hi, assumptions)
    return SymRange(lo, hi)


def sym_min(a: SymExpr, b: SymExpr, assumptions=None) -> SymExpr:
    rel = compare(a, b, assumptions)
    if rel in (Relation.LE, Relation.LT, Relation.EQ):
        return a
    if rel in (Relation.GE, Relation.GT):
        return b
    return BOTTOM


def sym_max(a: SymExpr, b: SymExpr, assumptions=None) -> SymExpr:
    rel = compare(a, b, assumptions)
    if rel in (Relation.GE, Relation.GT, Relation.EQ):
        return a
    if rel in (Relation.LE, Relation.LT):
        return b
    return BOTTOM


def substitute(x, binding):
    """Substitute atoms in an expression or range."""
    if isinstance(x, SymRange):
        return x.substitute(binding)
    return SymExpr.coerce(x).substitute(binding)


def substitute_ranges(bound: SymExpr, binding: Mapping[Atom, SymRange], upper: bool) -> SymExpr:
    """Replace atoms by ranges inside a lower (``upper=False``) or upper bound.

    Linear occurrences take the range end matching the coefficient sign.
    Non-linear or subscript occurrences need a point range, else bottom.
    """
    if bound.bottom:
        return BOTTOM
    point = {a: r.lo for a, r in binding.items() if not r.is_bottom and r.is_point}
    result = SymExpr()
    for mono, coef in bound.terms:
        if len(mono) == 1 and mono[0] in binding:
            r = binding[mono[0]]
            if r.is_bottom:
                return BOTTOM
            take_hi = (coef > 0) == upper
            result = result + (r.hi if take_hi else r.lo) * coef
            continue
        term = SymExpr.literal(coef)
        for a in mono:
            if a in binding and a not in point:
                return BOTTOM
            if isinstance(a, Elem) and a.index.mentions(lambda t: t in binding and t not in point):
                return BOTTOM
            term = term * _subst_atom(a, point)
        result = result + term
    return result


def substitute_range(r: SymRange, binding: Mapping[Atom, SymRange]) -> SymRange:
    if r.is_bottom:
        return BOTTOM_RANGE
    return SymRange(substitute_ranges(r.lo, binding, False), substitute_ranges(r.hi, binding, True))


# --------------------------------------------------------------------------- #
# Sign and comparison
# --------------------------------------------------------------------------- #


class SignFact(enum.Enum):
    NonNegative = "NonNegative"
    NonPositive = "NonPositive"
    StrictlyPositive = "StrictlyPositive"
    StrictlyNegative = "StrictlyNegative"
    Unknown = "Unknown"


class Relation(enum.Enum):
    LE = "ProvablyLE"
    LT = "ProvablyLT"
    GE = "ProvablyGE"
    GT = "ProvablyGT"
    EQ = "ProvablyEQ"
    UNKNOWN = "Unknown"


class Property(enum.Enum):
    Monotonic_inc = "Monotonic_inc"
    Monotonic_dec = "Monotonic_dec"
    StrictMonotonic_inc = "StrictMonotonic_inc"
    StrictMonotonic_dec = "StrictMonotonic_dec"
    Injective = "Injective"
    Identity = "Identity"

    @property
    def is_monotonic(self) -> bool:
        return self.name.startswith(("Monotonic", "StrictMonotonic"))

    @property
    def increasing(self) -> bool:
        return self.name.endswith("_inc")

    @property
    def strict(self) -> bool:
        return self.name.startswith("Strict")


@dataclass
class Assumptions:
    """Context used to decide signs.

    ``params`` are positive integers.  ``ranges`` bound other atoms
    (loop indices, loop-entry scalars).  ``facts`` is a sequence of objects
    with ``array``, ``subscript`` (SymRange) and either ``value`` (SymRange)
    or ``prop`` (Property); see :class:`indexprop.facts.FactEntry`.
    """

    params: frozenset = frozenset()
    ranges: Dict[Atom, SymRange] = field(default_factory=dict)
    facts: tuple = ()
    used: list = field(default_factory=list)

    def extend(self, ranges=None, facts=None) -> "Assumptions":
        new_ranges = dict(self.ranges)
        new_ranges.update(ranges or {})
        return Assumptions(self.params, new_ranges, tuple(self.facts) + tuple(facts or ()), self.used)

    def note(self, fact) -> None:
        if fact not in self.used:
            self.used.append(fact)


_MAX_DEPTH = 6


def _param_only(e: SymExpr, params) -> bool:
    return all(isinstance(a, Var) and a.name in params for a in e.atoms())


def _provably_ge(e: SymExpr, c: Number, params) -> bool:
    """e >= c for a polynomial over positive integer params."""
    d = e - c
    if d.bottom or not _param_only(d, params):
        return False
    if any(coef < 0 for m, coef in d.terms if m):
        return False
    # every monomial is >= 1 and non-decreasing when all params are >= 1
    return sum((coef for _, coef in d.terms), Fraction(0)) >= 0


def _atom_bound(a: Atom, upper: bool, asm: Assumptions, depth: int) -> Optional[SymExpr]:
    if isinstance(a, Var) and a.name in asm.params:
        return SymExpr.atom(a)
    if a in asm.ranges:
        r = asm.ranges[a]
        if r.is_bottom:
            return None
        return r.hi if upper else r.lo
    if isinstance(a, Elem):
        for f in asm.facts:
            if f.array != a.array:
                continue
            val = getattr(f, "value", None)
            if val is not None and not val.is_bottom and _covers(f.subscript, a.index, asm, depth):
                asm.note(f)
                return val.hi if upper else val.lo
            prop = getattr(f, "prop", None)
            if prop is Property.Identity and _covers(f.subscript, a.index, asm, depth):
                asm.note(f)
                return a.index
    return None


def _covers(sub: SymRange, index: SymExpr, asm: Assumptions, depth: int) -> bool:
    if depth >= _MAX_DEPTH:
        return False
    return _sign_lb(index - sub.lo, asm, depth + 1) >= 0 and _sign_lb(sub.hi - index, asm, depth + 1) >= 0


def _pair_monotonic(e: SymExpr, asm: Assumptions, upper: bool, depth: int) -> Tuple[SymExpr, SymExpr]:
    """Replace pairs ``c*(y[s1] - y[s2])`` by a bound derived from a monotonic fact.

    Returns ``(remaining expression, bound contribution)``.
    """
    if depth >= _MAX_DEPTH:
        return e, SymExpr()
    linear = [(m[0], c) for m, c in e.terms if len(m) == 1 and isinstance(m[0], Elem)]
    rest = e
    extra = SymExpr()
    used_atoms = set()
    for a1, c1 in linear:
        for a2, c2 in linear:
            if a1 in used_atoms or a2 in used_atoms or a1.array != a2.array or c1 != -c2 or c1 <= 0:
                continue
            d = a1.index - a2.index
            if not d.is_literal or d.value == 0:
                continue
            # c1*(a1 - a2); let hi_at be the element with the larger subscript
            gap = d.value
            sign = 1 if gap > 0 else -1
            lo_idx, hi_idx = (a2.index, a1.index) if gap > 0 else (a1.index, a2.index)
            for f in asm.facts:
                prop = getattr(f, "prop", None)
                if f.array != a1.array or prop is None or not prop.is_monotonic:
                    continue
                # adjacent pairs (t-1, t) for t in [lo_idx+1 : hi_idx] must lie in the fact
                if not (
                    _sign_lb(lo_idx + 1 - f.subscript.lo, asm, depth + 1) >= 0
                    and _sign_lb(f.subscript.hi - hi_idx, asm, depth + 1) >= 0
                ):
                    continue
                step = abs(gap) if prop.strict else 0
                # D = y[hi_idx] - y[lo_idx]; inc: D >= step, dec: D <= -step
                # contribution = c1 * sign * D
                want_lower_of_D = (sign > 0) != upper
                if prop.increasing and want_lower_of_D:
                    bound = SymExpr.literal(step)
                elif not prop.increasing and not want_lower_of_D:
                    bound = SymExpr.literal(-step)
                else:
                    continue
                asm.note(f)
                rest = rest.without(a1).without(a2)
                extra = extra + bound * (c1 * sign)
                used_atoms |= {a1, a2}
                break
    return rest, extra


def _bound(e: SymExpr, upper: bool, asm: Assumptions, depth: int) -> Optional[SymExpr]:
    """A param-only lower (or upper) bound of ``e``, or None."""
    if e.bottom:
        return None
    cur, acc = _pair_monotonic(e, asm, upper, depth)
    for _ in range(_MAX_DEPTH):
        if _param_only(cur, asm.params):
            return cur + acc
        nxt = SymExpr()
        for mono, coef in cur.terms:
            if all(isinstance(a, Var) and a.name in asm.params for a in mono):
                nxt = nxt + SymExpr(((mono, coef),))
                continue
            if len(mono) != 1:
                return None
            b = _atom_bound(mono[0], (coef > 0) == upper, asm, depth)
            if b is None or b.bottom:
                return None
            nxt = nxt + b * coef
        cur = nxt
    return cur + acc if _param_only(cur, asm.params) else None


def _sign_lb(e: SymExpr, asm: Assumptions, depth: int = 0):
    """Largest c in {1, 0} with e >= c provable, else -inf."""
    if e.bottom:
        return float("-inf")
    if e.is_literal:
        return e.const
    lb = _bound(e, False, asm, depth)
    if lb is None:
        return float("-inf")
    if _provably_ge(lb, 1, asm.params):
        return 1
    if _provably_ge(lb, 0, asm.params):
        return 0
    return float("-inf")


def _sign_ub(e: SymExpr, asm: Assumptions, depth: int = 0):
    v = _sign_lb(-e, asm, depth)
    return -v


def _default(asm: Optional[Assumptions]) -> Assumptions:
    return asm if asm is not None else Assumptions()


def sign_of(e, assumptions: Optional[Assumptions] = None) -> SignFact:
    """Sign of an expression, or of every value in a range."""
    asm = _default(assumptions)
    if isinstance(e, SymRange):
        if e.is_bottom:
            return SignFact.Unknown
        lo, hi = _sign_lb(e.lo, asm), _sign_ub(e.hi, asm)
    else:
        e = SymExpr.coerce(e)
        if e.bottom:
            return SignFact.Unknown
        lo, hi = _sign_lb(e, asm), _sign_ub(e, asm)
    if lo >= 1:
        return SignFact.StrictlyPositive
    if hi <= -1:
        return SignFact.StrictlyNegative
    if lo >= 0:
        return SignFact.NonNegative
    if hi <= 0:
        return SignFact.NonPositive
    return SignFact.Unknown


def compare(a, b, assumptions: Optional[Assumptions] = None) -> Relation:
    """Sound, incomplete ordering of two expressions."""
    a, b = SymExpr.coerce(a), SymExpr.coerce(b)
    d = b - a
    if d.bottom:
        return Relation.UNKNOWN
    if not d.terms:
        return Relation.EQ
    asm = _default(assumptions)
    lo = _sign_lb(d, asm)
    hi = _sign_ub(d, asm)
    if lo >= 0 and hi <= 0:
        return Relation.EQ
    if lo >= 1:
        return Relation.LT
    if lo >= 0:
        return Relation.LE
    if hi <= -1:
        return Relation.GT
    if hi <= 0:
        return Relation.GE
    return Relation.UNKNOWN


def holds(rel: Relation, want: str) -> bool:
    """Does ``rel`` establish ``a <want> b`` where want is one of < <= == >= >."""
    table = {
        "<": {Relation.LT},
        "<=": {Relation.LT, Relation.LE, Relation.EQ},
        "==": {Relation.EQ},
        ">=": {Relation.GT, Relation.GE, Relation.EQ},
        ">": {Relation.GT},
    }
    return rel in table[want]
