"""Typechecking of transition functions against their declared signatures.

``typecheck`` returns a list of diagnostics (empty iff the function is
well-formed) rather than raising, so callers can collect every problem in
one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MissingReturnError, RsmTypeError, SrtrError, UnboundIdentifierError
from .syntax import (
    Assign, Binary, Block, Const, Expr, If, InputRef, ParamRef, Return,
    StateRef, Stmt, TransitionFn, Unary, VarRef, Vec2Lit,
    BINARY_OPS, BOOL, NUM, STATE, UNARY_OPS, VEC2,
    pretty_expr, value_type,
)

_ERROR_CLASSES = {
    "TypeError": RsmTypeError,
    "UnboundIdentifier": UnboundIdentifierError,
    "MissingReturn": MissingReturnError,
}


@dataclass(frozen=True)
class Diagnostic:
    kind: str      # "TypeError" | "UnboundIdentifier" | "MissingReturn"
    message: str

    def to_error(self) -> SrtrError:
        return _ERROR_CLASSES[self.kind](self.message)

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


class _Checker:
    def __init__(self, fn: TransitionFn):
        self.fn = fn
        self.diags: list[Diagnostic] = []
        self.inputs = fn.input_sig
        self.vars = fn.var_sig
        self.params = set(fn.params)
        self.states = set(fn.states)

    def err(self, kind: str, message: str):
        self.diags.append(Diagnostic(kind, message))

    def guess_namespace(self, name: str) -> str:
        hints = []
        if name in self.inputs:
            hints.append(f"in:{name}")
        if name in self.vars:
            hints.append(f"var:{name}")
        if name in self.params:
            hints.append(f"param:{name}")
        if name in self.states:
            hints.append(f'state "{name}"')
        return f" (did you mean {' or '.join(hints)}?)" if hints else ""

    # returns the expression type, or None when it cannot be determined
    def infer(self, e: Expr) -> str | None:
        if isinstance(e, Const):
            ty = value_type(e.value)
            if ty == STATE and e.value not in self.states:
                self.err("UnboundIdentifier",
                         f'undeclared state "{e.value}"{self.guess_namespace(e.value)}')
            return ty
        if isinstance(e, StateRef):
            return STATE
        if isinstance(e, VarRef):
            if e.name not in self.vars:
                self.err("UnboundIdentifier", f"undeclared var:{e.name}{self.guess_namespace(e.name)}")
                return None
            return self.vars[e.name]
        if isinstance(e, InputRef):
            if e.name not in self.inputs:
                self.err("UnboundIdentifier", f"undeclared in:{e.name}{self.guess_namespace(e.name)}")
                return None
            return self.inputs[e.name]
        if isinstance(e, ParamRef):
            if e.name not in self.params:
                self.err("UnboundIdentifier", f"undeclared param:{e.name}{self.guess_namespace(e.name)}")
                return None
            return NUM
        if isinstance(e, Vec2Lit):
            for comp in (e.x, e.y):
                ty = self.infer(comp)
                if ty is not None and ty != NUM:
                    self.err("TypeError",
                             f"vector component must be num, got {ty} in {pretty_expr(e)}")
            return VEC2
        if isinstance(e, Unary):
            aty = self.infer(e.arg)
            if aty is None:
                return None
            for args, res in UNARY_OPS[e.op].sigs:
                if args == (aty,):
                    return res
            self.err("TypeError", f"{e.op} does not accept {aty} in {pretty_expr(e)}")
            return None
        if isinstance(e, Binary):
            lty = self.infer(e.left)
            rty = self.infer(e.right)
            if lty is None or rty is None:
                return None
            info = BINARY_OPS[e.op]
            for args, res in info.sigs:
                if args == (lty, rty):
                    if e.op == "/" and isinstance(e.right, Const) and e.right.value == 0.0:
                        self.err("TypeError", f"division by zero constant in {pretty_expr(e)}")
                    return res
            self.err("TypeError",
                     f"{e.op} does not accept ({lty}, {rty}) in {pretty_expr(e)}")
            return None
        raise TypeError(f"not an expression: {e!r}")

    def expect(self, e: Expr, want: str, what: str):
        ty = self.infer(e)
        if ty is not None and ty != want:
            self.err("TypeError", f"{what} must be {want}, got {ty} in {pretty_expr(e)}")

    # returns True when every control path through the statement returns
    def check_stmt(self, s: Stmt) -> bool:
        if isinstance(s, Return):
            self.expect(s.value, STATE, "return value")
            return True
        if isinstance(s, Assign):
            if s.name not in self.vars:
                self.err("UnboundIdentifier",
                         f"assignment to undeclared var:{s.name}{self.guess_namespace(s.name)}")
                self.infer(s.value)
                return False
            ty = self.infer(s.value)
            want = self.vars[s.name]
            if ty is not None and ty != want:
                self.err("TypeError",
                         f"var:{s.name} has type {want}, assigned {ty}")
            return False
        if isinstance(s, If):
            self.expect(s.cond, BOOL, "if condition")
            then_returns = self.check_stmt(s.then)
            else_returns = self.check_stmt(s.orelse)
            return then_returns and else_returns
        if isinstance(s, Block):
            returns = False
            for sub in s.stmts:
                if returns:
                    # dead code after a returning statement is tolerated
                    self.check_stmt(sub)
                    continue
                returns = self.check_stmt(sub)
            return returns
        raise TypeError(f"not a statement: {s!r}")


def typecheck(fn: TransitionFn) -> list[Diagnostic]:
    """Check fn against its declared signatures; empty list iff well-formed."""
    ck = _Checker(fn)
    for s, what in ((fn.start, "start"), (fn.end, "end")):
        if s not in ck.states:
            ck.err("UnboundIdentifier", f'{what} state "{s}" is not declared')
    for name, ty, init in fn.vars:
        ity = value_type(init)
        if ity != ty:
            ck.err("TypeError", f"var:{name} declared {ty} but initialized with {ity}")
    all_return = ck.check_stmt(fn.body)
    if not all_return:
        ck.err("MissingReturn", "a control path through the transition body falls off the end")
    return ck.diags
