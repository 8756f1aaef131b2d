"""AST for the kernel language.

Nodes are frozen dataclasses so programs are hashable and comparable.
Column numbers are excluded from equality; line numbers are kept because
loop ids are derived from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


# expressions ---------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    # printed as ``id++``; the increment itself is a following desugared Assign
    postinc: bool = False
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Index:
    array: str
    subscripts: Tuple["Expr", ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Compare:
    op: str  # < <= > >= == !=
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoolOp:
    op: str  # && || !
    operands: Tuple["Cond", ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Expr = Union[Num, Name, Index, BinOp, Neg]
Cond = Union[Compare, BoolOp]


# statements ----------------------------------------------------------------


@dataclass(frozen=True)
class ScalarLV:
    name: str


@dataclass(frozen=True)
class ArrayLV:
    name: str
    subscripts: Tuple[Expr, ...]


LValue = Union[ScalarLV, ArrayLV]


@dataclass(frozen=True)
class Assign:
    target: LValue
    value: Expr
    # None | "postinc-stmt" (x++;) | "compound" (x += e;) | "desugared" (from x++ in a subscript)
    sugar: Optional[str] = None
    line: int = 0
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Cond
    then: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()
    line: int = 0
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class For:
    var: str
    lower: Expr
    bound: Expr  # as written
    inclusive: bool  # True for <=
    body: Tuple["Stmt", ...]
    line: int = 0
    col: int = field(default=0, compare=False)
    expect: Optional[str] = None  # from a //@expect directive

    @property
    def upper(self) -> Expr:
        """Exclusive upper bound (``<=`` normalised to ``<``)."""
        if self.inclusive:
            return BinOp("+", self.bound, Num(1))
        return self.bound

    @property
    def loop_id(self) -> str:
        return f"loop@{self.line}"


Stmt = Union[Assign, If, For]


@dataclass(frozen=True)
class Decl:
    name: str
    kind: str  # "param" | "int" | "float"
    extents: Tuple[Expr, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def rank(self) -> int:
        return len(self.extents)


@dataclass(frozen=True)
class Program:
    decls: Tuple[Decl, ...]
    body: Tuple[Stmt, ...]
    directives: Tuple[str, ...] = ()
    filename: str = field(default="<input>", compare=False)

    @property
    def params(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.decls if d.kind == "param")

    def decl(self, name: str) -> Optional[Decl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    def is_array(self, name: str) -> bool:
        d = self.decl(name)
        return d is not None and d.rank > 0

    def is_scalar(self, name: str) -> bool:
        d = self.decl(name)
        return d is not None and d.kind != "param" and d.rank == 0

    def loops(self):
        """All loops in program order (pre-order)."""
        return list(iter_loops(self.body))

    def loop(self, loop_id: str) -> For:
        for lp in self.loops():
            if lp.loop_id == loop_id:
                return lp
        raise KeyError(loop_id)

    def span_table(self):
        """Statement line numbers, keyed by loop id for loops."""
        return {lp.loop_id: (lp.line, last_line(lp)) for lp in self.loops()}


def iter_loops(stmts):
    for s in stmts:
        if isinstance(s, For):
            yield s
            yield from iter_loops(s.body)
        elif isinstance(s, If):
            yield from iter_loops(s.then)
            yield from iter_loops(s.orelse)


def iter_stmts(stmts):
    """Pre-order walk over all statements."""
    for s in stmts:
        yield s
        if isinstance(s, For):
            yield from iter_stmts(s.body)
        elif isinstance(s, If):
            yield from iter_stmts(s.then)
            yield from iter_stmts(s.orelse)


def last_line(s) -> int:
    line = s.line
    for t in iter_stmts((s,)):
        line = max(line, t.line)
    return line


def walk_expr(e):
    """Yield ``e`` and all sub-expressions (conditions included)."""
    yield e
    if isinstance(e, Index):
        for s in e.subscripts:
            yield from walk_expr(s)
    elif isinstance(e, (BinOp, Compare)):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Neg):
        yield from walk_expr(e.operand)
    elif isinstance(e, BoolOp):
        for o in e.operands:
            yield from walk_expr(o)


def written_scalars(stmts) -> set:
    out = set()
    for s in iter_stmts(stmts):
        if isinstance(s, Assign) and isinstance(s.target, ScalarLV):
            out.add(s.target.name)
        elif isinstance(s, For):
            out.add(s.var)
    return out


def written_arrays(stmts) -> set:
    return {
        s.target.name
        for s in iter_stmts(stmts)
        if isinstance(s, Assign) and isinstance(s.target, ArrayLV)
    }


def stmt_exprs(s):
    """Expressions evaluated directly by a statement (not nested statements)."""
    if isinstance(s, Assign):
        if isinstance(s.target, ArrayLV):
            yield from s.target.subscripts
        yield s.value
    elif isinstance(s, If):
        yield s.cond
    elif isinstance(s, For):
        yield s.lower
        yield s.bound


def read_names(e) -> set:
    return {x.id for x in walk_expr(e) if isinstance(x, Name)}


def read_arrays(e) -> set:
    return {x.array for x in walk_expr(e) if isinstance(x, Index)}
