"""Lexer, recursive-descent parser and validator for ``.knl`` kernels."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .ast import (
    ArrayLV,
    Assign,
    BinOp,
    BoolOp,
    Compare,
    Decl,
    For,
    If,
    Index,
    Name,
    Neg,
    Num,
    Program,
    ScalarLV,
    read_arrays,
    read_names,
    walk_expr,
    written_arrays,
    written_scalars,
)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def format(self, filename: str) -> str:
        return f"{filename}:{self.line}:{self.col}: {self.message}"


class KernelError(Exception):
    """Source rejected; carries every diagnostic found."""

    def __init__(self, diagnostics: List[Diagnostic], filename: str = "<input>"):
        self.diagnostics = list(diagnostics)
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # id, num, op, kw, directive, eof
    text: str
    line: int
    col: int


KEYWORDS = {"for", "if", "else", "param", "int", "float"}
UNSUPPORTED_KEYWORDS = {
    "while": "while-loops are not supported",
    "do": "do-while loops are not supported",
    "switch": "switch statements are not supported",
    "goto": "goto is not supported",
    "break": "break is not supported",
    "continue": "continue is not supported",
    "return": "return is not supported",
    "double": "only int and float declarations are supported",
    "char": "only int and float declarations are supported",
    "long": "only int and float declarations are supported",
    "struct": "structs are not supported",
    "void": "functions are not supported",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<directive>//@[^\n]*)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<hash>\#[^\n]*)
  | (?P<num>\d+(?![\w.]))
  | (?P<badnum>\d+\.\d*|\d+\w+)
  | (?P<id>[A-Za-z_]\w*)
  | (?P<op>\+\+|--|\+=|-=|<=|>=|==|!=|&&|\|\||->|[-+*/%<>=!;,()\[\]{}&.?:|^~])
  | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(src: str, diags: List[Diagnostic]) -> List[Token]:
    toks: List[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            nls = text.count("\n")
            if nls:
                line += nls
                line_start = pos + text.rfind("\n") + 1
        elif kind == "hash":
            parts = text[1:].split()
            if parts and parts[0] == "line" and len(parts) >= 2 and parts[1].isdigit():
                # the line after the directive gets the given number
                line = int(parts[1]) - 1
            elif parts and parts[0] == "pragma":
                pass
            else:
                diags.append(Diagnostic(line, col, f"preprocessor directive not supported: {text.strip()}"))
        elif kind == "directive":
            toks.append(Token("directive", text[3:].strip(), line, col))
        elif kind == "num":
            toks.append(Token("num", text, line, col))
        elif kind == "badnum":
            diags.append(Diagnostic(line, col, f"unsupported literal '{text}' (integers only)"))
            toks.append(Token("num", "0", line, col))
        elif kind == "id":
            toks.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
        elif kind == "op":
            toks.append(Token("op", text, line, col))
        elif kind == "bad":
            diags.append(Diagnostic(line, col, f"unexpected character {text!r}"))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


class _ParseError(Exception):
    def __init__(self, tok: Token, message: str):
        super().__init__(message)
        self.diag = Diagnostic(tok.line, tok.col, message)


class Parser:
    def __init__(self, src: str, filename: str = "<input>"):
        self.filename = filename
        self.diags: List[Diagnostic] = []
        self.toks = tokenize(src, self.diags)
        self.pos = 0
        self.pending_expect: Optional[str] = None
        self.directives: List[str] = []
        # per-statement post-increment bookkeeping
        self._postincs: Optional[list] = None
        self._in_subscript = 0

    # token helpers ------------------------------------------------------- #

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _ParseError(self.tok, f"expected '{text}', found {self._describe(self.tok)}")
        return self.advance()

    def expect_id(self) -> Token:
        if self.tok.kind != "id":
            raise _ParseError(self.tok, f"expected identifier, found {self._describe(self.tok)}")
        return self.advance()

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else f"'{t.text}'"

    def recover(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                if depth == 0:
                    return
                depth -= 1
                if depth == 0:
                    # a rejected construct ends with its block
                    self.advance()
                    return
            elif self.at(";") and depth == 0:
                self.advance()
                return
            self.advance()

    def take_directives(self) -> None:
        while self.tok.kind == "directive":
            t = self.advance()
            words = t.text.split()
            if words and words[0] == "expect":
                self.pending_expect = " ".join(words[1:])
            else:
                self.directives.append(t.text)

    # program -------------------------------------------------------------- #

    def parse_program(self) -> Program:
        decls, body = [], []
        while True:
            self.take_directives()
            if self.tok.kind == "eof":
                break
            start = self.pos
            try:
                if self.at("param") or self.at("int") or self.at("float"):
                    decls.extend(self.parse_decl())
                else:
                    body.extend(self.parse_stmt())
            except _ParseError as e:
                self.diags.append(e.diag)
                self.recover()
                if self.pos == start:
                    self.advance()
        return Program(tuple(decls), tuple(body), tuple(self.directives), self.filename)

    def parse_decl(self):
        kind_tok = self.advance()
        out = []
        while True:
            name = self.expect_id()
            extents = []
            while self.at("["):
                self.advance()
                extents.append(self.parse_expr())
                self.expect("]")
            if kind_tok.text == "param" and extents:
                raise _ParseError(name, "params are scalars")
            out.append(Decl(name.text, kind_tok.text, tuple(extents), name.line))
            if self.at(","):
                self.advance()
                continue
            self.expect(";")
            return out

    # statements ----------------------------------------------------------- #

    def parse_block(self):
        if self.at("{"):
            self.advance()
            stmts = []
            while not self.at("}"):
                self.take_directives()
                if self.at("}"):
                    break
                if self.tok.kind == "eof":
                    raise _ParseError(self.tok, "unterminated block")
                start = self.pos
                try:
                    stmts.extend(self.parse_stmt())
                except _ParseError as e:
                    self.diags.append(e.diag)
                    self.recover()
                    if self.pos == start:
                        self.advance()
            self.advance()
            return tuple(stmts)
        self.take_directives()
        return tuple(self.parse_stmt())

    def parse_stmt(self):
        t = self.tok
        if t.kind == "id" and t.text in UNSUPPORTED_KEYWORDS:
            raise _ParseError(t, UNSUPPORTED_KEYWORDS[t.text])
        if self.at("for"):
            return [self.parse_for()]
        if self.at("if"):
            return [self.parse_if()]
        if self.at("param") or self.at("int") or self.at("float"):
            raise _ParseError(t, "declarations must appear at top level")
        if self.at("{"):
            raise _ParseError(t, "bare blocks are not supported")
        return self.parse_assign_stmt()

    def parse_for(self) -> For:
        kw = self.advance()
        expect = self.pending_expect
        self.pending_expect = None
        self.expect("(")
        var = self.expect_id()
        if not self.at("="):
            raise _ParseError(self.tok, "loop header must initialise the index")
        self.advance()
        lower = self.parse_expr()
        self.expect(";")
        cvar = self.expect_id()
        if cvar.text != var.text:
            raise _ParseError(cvar, f"loop condition must test the index '{var.text}'")
        if self.at("<"):
            inclusive = False
        elif self.at("<="):
            inclusive = True
        else:
            raise _ParseError(self.tok, "loop condition must be '<' or '<=' (non-canonical loop)")
        self.advance()
        bound = self.parse_expr()
        self.expect(";")
        self.parse_increment(var.text)
        self.expect(")")
        body = self.parse_block()
        return For(var.text, lower, bound, inclusive, body, kw.line, kw.col, expect)

    def parse_increment(self, var: str) -> None:
        t = self.tok
        if t.kind == "id" and t.text == var and self.peek().text == "++":
            self.advance()
            self.advance()
            return
        if self.at("++") and self.peek().kind == "id" and self.peek().text == var:
            self.advance()
            self.advance()
            return
        if t.kind == "id" and t.text == var and self.peek().text == "+=":
            self.advance()
            self.advance()
            n = self.tok
            if n.kind == "num" and n.text == "1":
                self.advance()
                return
            raise _ParseError(n, "non-unit stride is not supported")
        if t.kind == "id" and t.text == var and self.peek().text == "=":
            save = self.pos
            self.advance()
            self.advance()
            e = self.parse_expr()
            if e == BinOp("+", Name(var), Num(1)) or e == BinOp("+", Num(1), Name(var)):
                return
            self.pos = save
            raise _ParseError(t, "non-unit stride is not supported")
        raise _ParseError(t, "loop increment must be a unit stride on the index")

    def parse_if(self) -> If:
        kw = self.advance()
        self.expect("(")
        cond = self.parse_cond()
        self.expect(")")
        then = self.parse_block()
        orelse = ()
        self.take_directives()
        if self.at("else"):
            self.advance()
            orelse = self.parse_block()
        return If(cond, then, orelse, kw.line, kw.col)

    def parse_assign_stmt(self):
        t = self.tok
        if t.kind != "id":
            raise _ParseError(t, f"expected statement, found {self._describe(t)}")
        # x++; x--;
        if self.peek().text in ("++", "--") and self.peek(2).text == ";":
            self.advance()
            op = self.advance().text
            self.advance()
            rhs = BinOp("+" if op == "++" else "-", Name(t.text, line=t.line, col=t.col), Num(1))
            sugar = "postinc-stmt" if op == "++" else "postdec-stmt"
            return [Assign(ScalarLV(t.text), rhs, sugar, t.line, t.col)]
        if self.peek().text == "(":
            raise _ParseError(t, "function calls are not supported")
        self._postincs = []
        try:
            target = self.parse_lvalue()
            op = self.tok
            if op.text not in ("=", "+=", "-="):
                raise _ParseError(op, f"expected assignment, found {self._describe(op)}")
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            incs = self._postincs
        finally:
            self._postincs = None
        sugar = None
        if op.text != "=":
            cur = Name(target.name) if isinstance(target, ScalarLV) else Index(target.name, target.subscripts)
            value = BinOp(op.text[0], cur, value)
            sugar = "compound"
        out = [Assign(target, value, sugar, t.line, t.col)]
        seen = set()
        for inc in incs:
            if inc.id in seen:
                raise _ParseError(t, f"'{inc.id}' incremented twice in one statement")
            if isinstance(target, ScalarLV) and target.name == inc.id:
                raise _ParseError(t, f"'{inc.id}' both assigned and incremented")
            seen.add(inc.id)
            out.append(
                Assign(ScalarLV(inc.id), BinOp("+", Name(inc.id), Num(1)), "desugared", t.line, t.col)
            )
        return out

    def parse_lvalue(self):
        name = self.expect_id()
        if self.at("["):
            subs = self.parse_subscripts()
            return ArrayLV(name.text, subs)
        if self.at("++"):
            raise _ParseError(self.tok, "post-increment of an assignment target is not supported")
        return ScalarLV(name.text)

    def parse_subscripts(self):
        subs = []
        while self.at("["):
            self.advance()
            self._in_subscript += 1
            try:
                subs.append(self.parse_expr())
            finally:
                self._in_subscript -= 1
            self.expect("]")
        return tuple(subs)

    # conditions ----------------------------------------------------------- #

    def parse_cond(self):
        left = self.parse_and()
        if self.at("||"):
            ops = [left]
            while self.at("||"):
                self.advance()
                ops.append(self.parse_and())
            return BoolOp("||", tuple(ops), left.line, left.col)
        return left

    def parse_and(self):
        left = self.parse_not()
        if self.at("&&"):
            ops = [left]
            while self.at("&&"):
                self.advance()
                ops.append(self.parse_not())
            return BoolOp("&&", tuple(ops), left.line, left.col)
        return left

    def parse_not(self):
        if self.at("!"):
            t = self.advance()
            return BoolOp("!", (self.parse_not(),), t.line, t.col)
        if self.at("("):
            save, ndiags = self.pos, len(self.diags)
            try:
                return self.parse_comparison()
            except _ParseError:
                self.pos = save
                del self.diags[ndiags:]
            self.advance()
            c = self.parse_cond()
            self.expect(")")
            return c
        return self.parse_comparison()

    def parse_comparison(self):
        t = self.tok
        left = self.parse_expr()
        if self.tok.text not in ("<", "<=", ">", ">=", "==", "!="):
            raise _ParseError(self.tok, "conditions must be comparisons")
        op = self.advance().text
        right = self.parse_expr()
        return Compare(op, left, right, t.line, t.col)

    # expressions ---------------------------------------------------------- #

    def parse_expr(self):
        left = self.parse_term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            right = self.parse_term()
            left = BinOp(op.text, left, right, op.line, op.col)
        return left

    def parse_term(self):
        left = self.parse_unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.advance()
            if op.text != "*":
                raise _ParseError(op, f"operator '{op.text}' is not supported")
            right = self.parse_unary()
            left = BinOp("*", left, right, op.line, op.col)
        return left

    def parse_unary(self):
        t = self.tok
        if self.at("-"):
            self.advance()
            operand = self.parse_unary()
            if isinstance(operand, Num):
                return Num(-operand.value, t.line, t.col)
            return Neg(operand, t.line, t.col)
        if self.at("+"):
            self.advance()
            return self.parse_unary()
        if self.at("*") or self.at("&"):
            raise _ParseError(t, "pointers are not supported")
        if self.at("++") or self.at("--"):
            raise _ParseError(t, "pre-increment/decrement is not supported")
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(int(t.text), t.line, t.col)
        if t.kind == "id":
            if t.text in UNSUPPORTED_KEYWORDS:
                raise _ParseError(t, UNSUPPORTED_KEYWORDS[t.text])
            self.advance()
            if self.at("("):
                raise _ParseError(t, "function calls are not supported")
            if self.at("["):
                return Index(t.text, self.parse_subscripts(), t.line, t.col)
            if self.at("++"):
                op = self.advance()
                if self._postincs is None or not self._in_subscript:
                    raise _ParseError(op, "post-increment is only supported inside subscripts or as a statement")
                node = Name(t.text, True, t.line, t.col)
                self._postincs.append(node)
                return node
            if self.at("--"):
                raise _ParseError(self.tok, "post-decrement is only supported as a statement")
            if self.at("->") or self.at("."):
                raise _ParseError(self.tok, "member access is not supported")
            return Name(t.text, False, t.line, t.col)
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        raise _ParseError(t, f"expected expression, found {self._describe(t)}")


# --------------------------------------------------------------------------- #
# Validation
# --------------------------------------------------------------------------- #


class _Validator:
    def __init__(self, program: Program, diags: List[Diagnostic]):
        self.p = program
        self.diags = diags
        self.declared = {}

    def error(self, node, message: str) -> None:
        self.diags.append(Diagnostic(getattr(node, "line", 0), getattr(node, "col", 0), message))

    def run(self) -> None:
        seen = set()
        for d in self.p.decls:
            if d.name in seen:
                self.diags.append(Diagnostic(d.line, 1, f"'{d.name}' declared twice"))
            seen.add(d.name)
            if d.kind == "float" and d.rank == 0:
                self.diags.append(Diagnostic(d.line, 1, "float scalars are not supported"))
            if d.rank > 2:
                self.diags.append(Diagnostic(d.line, 1, "arrays of rank > 2 are not supported"))
            for e in d.extents:
                for n in read_names(e):
                    dd = self.p.decl(n)
                    if dd is None or dd.kind != "param":
                        self.diags.append(Diagnostic(d.line, 1, f"extent of '{d.name}' must use params only"))
                if read_arrays(e):
                    self.diags.append(Diagnostic(d.line, 1, f"extent of '{d.name}' must use params only"))
        self.block(self.p.body)

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s) -> None:
        if isinstance(s, Assign):
            t = s.target
            d = self.p.decl(t.name)
            if d is None:
                self.error(s, f"undeclared identifier '{t.name}'")
            elif d.kind == "param":
                self.error(s, f"cannot assign to param '{t.name}'")
            elif isinstance(t, ScalarLV) and d.rank:
                self.error(s, f"array '{t.name}' used without subscript")
            elif isinstance(t, ArrayLV):
                if d.rank == 2:
                    self.error(s, f"rank-2 array '{t.name}' may only be read")
                elif len(t.subscripts) != d.rank:
                    self.error(s, f"'{t.name}' expects {d.rank} subscript(s)")
                for sub in t.subscripts:
                    self.int_expr(sub, s)
            is_float = d is not None and d.kind == "float"
            if is_float:
                self.expr(s.value, s)
            else:
                self.int_expr(s.value, s)
        elif isinstance(s, If):
            self.cond(s.cond, s)
            self.block(s.then)
            self.block(s.orelse)
        elif isinstance(s, For):
            d = self.p.decl(s.var)
            if d is None:
                self.error(s, f"undeclared loop index '{s.var}'")
            elif d.kind != "int" or d.rank:
                self.error(s, f"loop index '{s.var}' must be an int scalar")
            self.int_expr(s.lower, s)
            self.int_expr(s.bound, s)
            ws, wa = written_scalars(s.body), written_arrays(s.body)
            if s.var in ws:
                self.error(s, f"loop index '{s.var}' is written in the loop body (non-canonical loop)")
            bad = (read_names(s.bound) & ws) | (read_arrays(s.bound) & wa)
            if bad:
                self.error(s, f"loop bound is not loop-invariant ({', '.join(sorted(bad))} written in body)")
            self.block(s.body)

    def cond(self, c, s) -> None:
        if isinstance(c, BoolOp):
            for o in c.operands:
                self.cond(o, s)
        else:
            self.expr(c.left, s)
            self.expr(c.right, s)

    def expr(self, e, s) -> None:
        for x in walk_expr(e):
            if isinstance(x, Name):
                d = self.p.decl(x.id)
                if d is None:
                    self.error(x, f"undeclared identifier '{x.id}'")
                elif d.rank:
                    self.error(x, f"array '{x.id}' used without subscript")
            elif isinstance(x, Index):
                d = self.p.decl(x.array)
                if d is None:
                    self.error(x, f"undeclared identifier '{x.array}'")
                elif d.rank != len(x.subscripts):
                    self.error(x, f"'{x.array}' expects {d.rank} subscript(s)")
                for sub in x.subscripts:
                    self.int_expr(sub, s)

    def is_float(self, e) -> bool:
        for x in walk_expr(e):
            if isinstance(x, Index):
                d = self.p.decl(x.array)
                if d is not None and d.kind == "float":
                    return True
        return False

    def int_expr(self, e, s) -> None:
        self.expr(e, s)
        if self.is_float(e):
            self.error(e if getattr(e, "line", 0) else s, "float value used in an integer context")
            return
        for x in walk_expr(e):
            if isinstance(x, BinOp) and x.op == "*":
                if not (_is_literal(x.left) or _is_literal(x.right)):
                    self.error(x if x.line else s, "product of two non-literal factors in an integer expression")


def _is_literal(e) -> bool:
    if isinstance(e, Num):
        return True
    if isinstance(e, Neg):
        return _is_literal(e.operand)
    if isinstance(e, BinOp) and e.op in "+-*":
        return _is_literal(e.left) and _is_literal(e.right)
    return False


def parse(source: str, filename: str = "<input>") -> Program:
    """Parse and validate kernel source; raises :class:`KernelError`."""
    parser = Parser(source, filename)
    program = parser.parse_program()
    diags = parser.diags
    if not diags:
        _Validator(program, diags).run()
        _check_loop_ids(program, diags)
    if diags:
        diags.sort(key=lambda d: (d.line, d.col))
        raise KernelError(diags, filename)
    return program


def _check_loop_ids(program: Program, diags) -> None:
    seen = {}
    for lp in program.loops():
        if lp.loop_id in seen:
            diags.append(Diagnostic(lp.line, lp.col, f"two loops on line {lp.line}; loop ids must be unique"))
        seen[lp.loop_id] = lp


def parse_file(path) -> Program:
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KernelError([Diagnostic(0, 0, "file not found")], str(path)) from None
    except UnicodeDecodeError:
        raise KernelError([Diagnostic(0, 0, "source is not valid UTF-8")], str(path)) from None
    return parse(text, str(path))
