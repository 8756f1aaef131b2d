"""Pretty-printer and pragma annotation.

The printer emits ``#line`` directives wherever the output line would
drift from a statement's recorded line, so re-parsing the output yields
the same loop ids.
"""

from __future__ import annotations

from typing import Dict, Mapping, Optional

from .ast import (
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
    written_scalars,
)

_PREC = {"||": 1, "&&": 2, "cmp": 3, "+": 4, "-": 4, "*": 5, "neg": 6, "atom": 7}


def expr_str(e, parent: int = 0, right: bool = False) -> str:
    if isinstance(e, Num):
        s, p = str(e.value), (_PREC["atom"] if e.value >= 0 else _PREC["neg"])
    elif isinstance(e, Name):
        s, p = e.id + ("++" if e.postinc else ""), _PREC["atom"]
    elif isinstance(e, Index):
        s = e.array + "".join(f"[{expr_str(x)}]" for x in e.subscripts)
        p = _PREC["atom"]
    elif isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p, True)}"
    elif isinstance(e, Neg):
        p = _PREC["neg"]
        s = f"-{expr_str(e.operand, p)}"
    elif isinstance(e, Compare):
        p = _PREC["cmp"]
        s = f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p, True)}"
    elif isinstance(e, BoolOp):
        if e.op == "!":
            p = _PREC["neg"]
            s = f"!{expr_str(e.operands[0], p)}"
        else:
            p = _PREC[e.op]
            s = f" {e.op} ".join(expr_str(o, p, i > 0) for i, o in enumerate(e.operands))
    else:
        raise TypeError(f"not an expression: {e!r}")
    if p < parent or (right and p == parent and p != _PREC["atom"]):
        return f"({s})"
    return s


def _lvalue_str(t) -> str:
    if isinstance(t, ScalarLV):
        return t.name
    return t.name + "".join(f"[{expr_str(x)}]" for x in t.subscripts)


class _Writer:
    def __init__(self, pragmas: Mapping[str, str]):
        self.lines = []
        self.pragmas = pragmas
        self.logical = 1  # line number the parser will give the next line

    def put(self, text: str, indent: int) -> None:
        self.lines.append("    " * indent + text)
        self.logical += 1

    def sync(self, line: int) -> None:
        if line and self.logical != line:
            self.lines.append(f"#line {line}")
            self.logical = line

    def block(self, stmts, indent: int) -> None:
        for s in stmts:
            self.stmt(s, indent)

    def stmt(self, s, indent: int) -> None:
        if isinstance(s, Assign):
            if s.sugar == "desugared":
                return
            self.sync(s.line)
            name = _lvalue_str(s.target)
            if s.sugar == "postinc-stmt":
                self.put(f"{name}++;", indent)
            elif s.sugar == "postdec-stmt":
                self.put(f"{name}--;", indent)
            elif s.sugar == "compound" and isinstance(s.value, BinOp):
                self.put(f"{name} {s.value.op}= {expr_str(s.value.right)};", indent)
            else:
                self.put(f"{name} = {expr_str(s.value)};", indent)
        elif isinstance(s, If):
            self.sync(s.line)
            self.put(f"if ({expr_str(s.cond)}) {{", indent)
            self.block(s.then, indent + 1)
            if s.orelse:
                self.put("} else {", indent)
                self.block(s.orelse, indent + 1)
            self.put("}", indent)
        elif isinstance(s, For):
            if s.expect:
                self.put(f"//@expect {s.expect}", indent)
            pragma = self.pragmas.get(s.loop_id)
            if pragma:
                self.put(pragma, indent)
            self.sync(s.line)
            cmp = "<=" if s.inclusive else "<"
            self.put(
                f"for ({s.var} = {expr_str(s.lower)}; {s.var} {cmp} {expr_str(s.bound)}; {s.var}++) {{",
                indent,
            )
            self.block(s.body, indent + 1)
            self.put("}", indent)


def pretty_print(program: Program, pragmas: Optional[Mapping[str, str]] = None) -> str:
    w = _Writer(pragmas or {})
    for d in program.directives:
        w.put(f"//@{d}", 0)
    params = [d.name for d in program.decls if d.kind == "param"]
    if params:
        w.put(f"param {', '.join(params)};", 0)
    for d in program.decls:
        if d.kind == "param":
            continue
        ext = "".join(f"[{expr_str(e)}]" for e in d.extents)
        w.put(f"{d.kind} {d.name}{ext};", 0)
    w.block(program.body, 0)
    return "\n".join(w.lines) + "\n"


def private_scalars(loop: For) -> list:
    """Scalars written inside the loop body, excluding the loop's own index."""
    return sorted(written_scalars(loop.body) - {loop.var})


def pragma_for(loop: For) -> str:
    priv = private_scalars(loop)
    if priv:
        return f"#pragma omp parallel for private({','.join(priv)})"
    return "#pragma omp parallel for"


def pragma_map(program: Program, verdicts: Mapping[str, object]) -> Dict[str, str]:
    """Loop id -> pragma for each outermost parallel loop.

    ``verdicts`` maps loop ids to objects with ``decision`` and ``peeled``
    attributes (or plain decision strings).  Loops nested in an annotated
    loop and loops needing a peeled first iteration get no pragma.
    """
    known = {lp.loop_id for lp in program.loops()}
    for lid in verdicts:
        if lid not in known:
            raise KeyError(f"internal error: unknown loop id {lid}")

    def is_parallel(lid: str) -> bool:
        v = verdicts.get(lid)
        if v is None:
            return False
        if isinstance(v, str):
            return v == "parallel"
        return v.decision == "parallel" and not getattr(v, "peeled", False)

    pragmas: Dict[str, str] = {}

    def visit(stmts) -> None:
        for s in stmts:
            if isinstance(s, For):
                if is_parallel(s.loop_id):
                    pragmas[s.loop_id] = pragma_for(s)
                else:
                    visit(s.body)
            elif isinstance(s, If):
                visit(s.then)
                visit(s.orelse)

    visit(program.body)
    return pragmas


def annotate(program: Program, verdicts: Mapping[str, object]) -> str:
    """Pretty-print with an OpenMP pragma above each outermost parallel loop."""
    return pretty_print(program, pragma_map(program, verdicts))
