"""Lexer and recursive-descent parser for the ``.rsm`` file format.

A file is four header sections followed by the transition body:

    states { A, B } start A end B;
    inputs { x: num, loc: vec2 };
    vars { v: num = 0 };
    params { p, q };
    transition { ... }

Expressions use explicit namespace prefixes (``in:x``, ``var:x``,
``param:x``), the bare keyword ``state``, vector literals ``<e1, e2>``, and
call syntax for ``sin``, ``cos``, ``abs``, ``norm``, ``anglemod`` and
``dot``.  Parsing is a pure function of the source bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import RsmSyntaxError
from .syntax import (
    Assign, Binary, Block, Const, Expr, If, InputRef, ParamRef, Return,
    StateRef, Stmt, TransitionFn, Unary, VarRef, Vec2Lit,
    CALL_BINARY, CALL_UNARY, EMPTY_BLOCK, NUM, VEC2,
)
from .typecheck import typecheck

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<str>"[A-Za-z_][A-Za-z_0-9]*")
  | (?P<op>:=|&&|\|\||==|!=|<=|>=|[{}()<>,;:+\-*/=])
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
""", re.VERBOSE)

KEYWORDS = {
    "states", "start", "end", "inputs", "vars", "params", "transition",
    "if", "else", "return", "state", "in", "var", "param",
    "num", "vec2", "true", "false",
}


@dataclass(frozen=True)
class Token:
    kind: str   # "num" | "str" | "op" | "ident" | "kw" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, col = 1, 1
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise RsmSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[min(self.i, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            t = self.tok
            want = text if text is not None else kind
            raise RsmSyntaxError(f"unexpected {t.text!r}", t.line, t.col, expected=(want,))
        return self.advance()

    def error(self, msg: str, *expected: str):
        t = self.tok
        raise RsmSyntaxError(msg, t.line, t.col, expected=expected)

    # --- header sections ---

    def parse_file(self) -> TransitionFn:
        self.expect("kw", "states")
        self.expect("op", "{")
        states = self.name_list()
        self.expect("op", "}")
        self.expect("kw", "start")
        start = self.expect("ident").text
        self.expect("kw", "end")
        end = self.expect("ident").text
        self.expect("op", ";")

        self.expect("kw", "inputs")
        self.expect("op", "{")
        inputs = []
        while not self.at("op", "}"):
            name = self.expect("ident").text
            self.expect("op", ":")
            ty = self.type_name()
            inputs.append((name, ty))
            if not self.at("op", "}"):
                self.expect("op", ",")
        self.advance()
        self.expect("op", ";")

        self.expect("kw", "vars")
        self.expect("op", "{")
        vars_ = []
        while not self.at("op", "}"):
            name = self.expect("ident").text
            self.expect("op", ":")
            ty = self.type_name()
            self.expect("op", "=")
            init = self.literal()
            vars_.append((name, ty, init))
            if not self.at("op", "}"):
                self.expect("op", ",")
        self.advance()
        self.expect("op", ";")

        self.expect("kw", "params")
        self.expect("op", "{")
        params = self.name_list()
        self.expect("op", "}")
        self.expect("op", ";")

        self.expect("kw", "transition")
        body = self.block()
        self.expect("eof")

        for group, names in (("state", states), ("input", [n for n, _ in inputs]),
                             ("var", [n for n, _, _ in vars_]), ("param", params)):
            seen = set()
            for n in names:
                if n in seen:
                    self.error(f"duplicate {group} name {n!r}")
                seen.add(n)
        return TransitionFn(tuple(states), start, end, tuple(inputs),
                            tuple(vars_), tuple(params), body)

    def name_list(self) -> list[str]:
        names = []
        while self.at("ident"):
            names.append(self.advance().text)
            if self.at("op", ","):
                self.advance()
            else:
                break
        return names

    def type_name(self) -> str:
        if self.at("kw", "num"):
            self.advance()
            return NUM
        if self.at("kw", "vec2"):
            self.advance()
            return VEC2
        self.error("expected a type", "num", "vec2")

    def literal(self):
        # numeric or vector literal, with optional leading minus
        if self.at("op", "<"):
            self.advance()
            x = self.signed_number()
            self.expect("op", ",")
            y = self.signed_number()
            self.expect("op", ">")
            return (x, y)
        return self.signed_number()

    def signed_number(self) -> float:
        sign = 1.0
        if self.at("op", "-"):
            self.advance()
            sign = -1.0
        return sign * float(self.expect("num").text)

    # --- statements ---

    def block(self) -> Block:
        self.expect("op", "{")
        stmts = []
        while not self.at("op", "}"):
            stmts.append(self.stmt())
        self.advance()
        return Block(tuple(stmts))

    def stmt(self) -> Stmt:
        if self.at("op", "{"):
            return self.block()
        if self.at("kw", "return"):
            self.advance()
            e = self.expr()
            self.expect("op", ";")
            return Return(e)
        if self.at("kw", "if"):
            self.advance()
            self.expect("op", "(")
            cond = self.expr()
            self.expect("op", ")")
            then = self.stmt()
            orelse: Stmt = EMPTY_BLOCK
            if self.at("kw", "else"):
                self.advance()
                orelse = self.stmt()
            return If(cond, then, orelse)
        if self.at("kw", "var"):
            self.advance()
            self.expect("op", ":")
            name = self.expect("ident").text
            self.expect("op", ":=")
            e = self.expr()
            self.expect("op", ";")
            return Assign(name, e)
        self.error("expected a statement", "return", "if", "var:", "{")

    # --- expressions (precedence climbing) ---

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at("op", "||"):
            self.advance()
            e = Binary("||", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.cmp_expr()
        while self.at("op", "&&"):
            self.advance()
            e = Binary("&&", e, self.cmp_expr())
        return e

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        while self.tok.kind == "op" and self.tok.text in ("<", ">", "<=", ">=", "==", "!="):
            op = self.advance().text
            e = Binary(op, e, self.add_expr())
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            e = Binary(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> Expr:
        e = self.unary_expr()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            e = Binary(op, e, self.unary_expr())
        return e

    def unary_expr(self) -> Expr:
        if self.at("op", "-"):
            self.advance()
            return Unary("neg", self.unary_expr())
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text))
        if t.kind == "str":
            self.advance()
            return Const(t.text[1:-1])
        if t.kind == "kw":
            if t.text == "true":
                self.advance()
                return Const(True)
            if t.text == "false":
                self.advance()
                return Const(False)
            if t.text == "state":
                self.advance()
                return StateRef()
            if t.text in ("in", "var", "param"):
                self.advance()
                self.expect("op", ":")
                name = self.expect("ident").text
                return {"in": InputRef, "var": VarRef, "param": ParamRef}[t.text](name)
        if t.kind == "ident" and t.text in CALL_UNARY:
            self.advance()
            self.expect("op", "(")
            arg = self.expr()
            self.expect("op", ")")
            return Unary(t.text, arg)
        if t.kind == "ident" and t.text in CALL_BINARY:
            self.advance()
            self.expect("op", "(")
            a = self.expr()
            self.expect("op", ",")
            b = self.expr()
            self.expect("op", ")")
            return Binary(t.text, a, b)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect("op", ")")
            return e
        if t.kind == "op" and t.text == "<":
            # vector literal in prefix position; components parse at additive
            # precedence so the closing '>' is not taken as a comparison
            self.advance()
            x = self.add_expr()
            self.expect("op", ",")
            y = self.add_expr()
            self.expect("op", ">")
            return Vec2Lit(x, y)
        self.error("expected an expression")


def parse_rsm_body(source: str) -> Block:
    """Parse a bare transition body (``{ ... }``) without headers."""
    p = _Parser(tokenize(source))
    body = p.block()
    p.expect("eof")
    return body


def parse_rsm(source: str) -> TransitionFn:
    """Parse and typecheck a full ``.rsm`` file.

    Raises RsmSyntaxError on malformed input and the first typecheck
    diagnostic (RsmTypeError / UnboundIdentifierError / MissingReturnError)
    if the parsed function is ill-typed.
    """
    fn = _Parser(tokenize(source)).parse_file()
    diags = typecheck(fn)
    if diags:
        raise diags[0].to_error()
    return fn
