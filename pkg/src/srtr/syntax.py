"""AST for transition functions, plus the operator table and pretty printer.

Values are plain Python objects: Num -> float, Bool -> bool, Vec2 -> (float,
float) tuple, StateName -> str.  All AST nodes are frozen dataclasses so
structural equality and hashing come for free; the parse -> pretty -> parse
round trip is expected to be the identity on ASTs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DivisionByZeroError, DomainError

Vec2 = tuple[float, float]
Value = float | bool | Vec2 | str

# type tags used by the checker and the operator table
NUM = "num"
VEC2 = "vec2"
BOOL = "bool"
STATE = "state"


def value_type(v: Value) -> str:
    # bool first: bool is a subclass of int
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, (int, float)):
        return NUM
    if isinstance(v, tuple):
        return VEC2
    if isinstance(v, str):
        return STATE
    raise TypeError(f"not a DSL value: {v!r}")


def is_finite_value(v: Value) -> bool:
    if isinstance(v, bool) or isinstance(v, str):
        return True
    if isinstance(v, tuple):
        return all(math.isfinite(c) for c in v)
    return math.isfinite(v)


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: Value


@dataclass(frozen=True)
class StateRef(Expr):
    pass


@dataclass(frozen=True)
class VarRef(Expr):
    name: str


@dataclass(frozen=True)
class InputRef(Expr):
    name: str


@dataclass(frozen=True)
class ParamRef(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Vec2Lit(Expr):
    x: Expr
    y: Expr


# ---------------------------------------------------------------------------
# statements

@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    value: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Stmt


@dataclass(frozen=True)
class Block(Stmt):
    stmts: tuple[Stmt, ...]


EMPTY_BLOCK = Block(())


@dataclass(frozen=True)
class TransitionFn:
    """A parsed transition function plus its declared signatures."""

    states: tuple[str, ...]
    start: str
    end: str
    inputs: tuple[tuple[str, str], ...]      # (name, "num"|"vec2") in decl order
    vars: tuple[tuple[str, str, Value], ...]  # (name, type, initial value)
    params: tuple[str, ...]
    body: Block

    @property
    def input_sig(self) -> dict[str, str]:
        return dict(self.inputs)

    @property
    def var_sig(self) -> dict[str, str]:
        return {n: t for n, t, _ in self.vars}

    @property
    def var_init(self) -> dict[str, Value]:
        return {n: v for n, _, v in self.vars}


@dataclass
class TraceElement:
    """Snapshot of inputs, program variables, and state at the start of step t."""

    t: int
    ins: dict[str, Value]
    vars: dict[str, Value]
    state: str


Trace = list[TraceElement]
ParamMap = dict[str, float]
DeltaMap = dict[str, float]


@dataclass(frozen=True)
class Correction:
    """Human-supplied expected state at the end of step t."""

    t: int
    expected: str


# ---------------------------------------------------------------------------
# operator table
#
# Each operator declares its type signatures, a concrete evaluator, and a
# linearity class consulted by the repairability analysis:
#   "affine"    preserves affineness of its operands
#   "bilinear"  product-like: affine only if at most one side is param-dependent
#   "division"  affine only if the divisor is param-free
#   "nonlinear" never affine when the argument is param-dependent
#   "compare" / "logic" boolean structure, lowered to constraint atoms
# Adding an operator means adding one entry here (and, if it is affine, a case
# in peval.to_affine).


def _anglemod(x: float) -> float:
    if not math.isfinite(x):
        raise DomainError(f"anglemod of non-finite value {x!r}")
    # normalize to (-pi, pi]
    return x - 2.0 * math.pi * math.ceil((x - math.pi) / (2.0 * math.pi))


def _norm(v: Value) -> float:
    if isinstance(v, tuple):
        return math.hypot(v[0], v[1])
    return abs(v)


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DivisionByZeroError("division by zero")
    return a / b


def _neg(v: Value) -> Value:
    if isinstance(v, tuple):
        return (-v[0], -v[1])
    return -v


def _add(a: Value, b: Value) -> Value:
    if isinstance(a, tuple):
        return (a[0] + b[0], a[1] + b[1])
    return a + b


def _sub(a: Value, b: Value) -> Value:
    if isinstance(a, tuple):
        return (a[0] - b[0], a[1] - b[1])
    return a - b


def _dot(a: Vec2, b: Vec2) -> float:
    return a[0] * b[0] + a[1] * b[1]


@dataclass(frozen=True)
class OpInfo:
    sigs: tuple[tuple[tuple[str, ...], str], ...]  # ((arg types...), result type)
    fold: object                                   # concrete evaluator
    linearity: str


UNARY_OPS: dict[str, OpInfo] = {
    "neg": OpInfo((((NUM,), NUM), ((VEC2,), VEC2)), _neg, "affine"),
    "sin": OpInfo((((NUM,), NUM),), math.sin, "nonlinear"),
    "cos": OpInfo((((NUM,), NUM),), math.cos, "nonlinear"),
    "abs": OpInfo((((NUM,), NUM),), abs, "nonlinear"),
    "norm": OpInfo((((NUM,), NUM), ((VEC2,), NUM)), _norm, "nonlinear"),
    "anglemod": OpInfo((((NUM,), NUM),), _anglemod, "nonlinear"),
}

BINARY_OPS: dict[str, OpInfo] = {
    "+": OpInfo((((NUM, NUM), NUM), ((VEC2, VEC2), VEC2)), _add, "affine"),
    "-": OpInfo((((NUM, NUM), NUM), ((VEC2, VEC2), VEC2)), _sub, "affine"),
    "*": OpInfo((((NUM, NUM), NUM),), lambda a, b: a * b, "bilinear"),
    "/": OpInfo((((NUM, NUM), NUM),), _div, "division"),
    "dot": OpInfo((((VEC2, VEC2), NUM),), _dot, "bilinear"),
    "<": OpInfo((((NUM, NUM), BOOL),), lambda a, b: a < b, "compare"),
    ">": OpInfo((((NUM, NUM), BOOL),), lambda a, b: a > b, "compare"),
    "<=": OpInfo((((NUM, NUM), BOOL),), lambda a, b: a <= b, "compare"),
    ">=": OpInfo((((NUM, NUM), BOOL),), lambda a, b: a >= b, "compare"),
    "==": OpInfo((((NUM, NUM), BOOL), ((STATE, STATE), BOOL)), lambda a, b: a == b, "compare"),
    "!=": OpInfo((((NUM, NUM), BOOL), ((STATE, STATE), BOOL)), lambda a, b: a != b, "compare"),
    "&&": OpInfo((((BOOL, BOOL), BOOL),), lambda a, b: a and b, "logic"),
    "||": OpInfo((((BOOL, BOOL), BOOL),), lambda a, b: a or b, "logic"),
}

COMPARISON_OPS = {"<", ">", "<=", ">=", "==", "!="}

# function-call surface syntax for these operators
CALL_UNARY = {"sin", "cos", "abs", "norm", "anglemod"}
CALL_BINARY = {"dot"}


# ---------------------------------------------------------------------------
# pretty printer

_PREC = {
    "||": 1, "&&": 2,
    "<": 3, ">": 3, "<=": 3, ">=": 3, "==": 3, "!=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5,
}
_UNARY_PREC = 6


def _fmt_num(v: float) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(float(v))


def pretty_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, tuple):
        return f"<{_fmt_num(v[0])}, {_fmt_num(v[1])}>"
    return _fmt_num(v)


def pretty_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Const):
        return pretty_value(e.value)
    if isinstance(e, StateRef):
        return "state"
    if isinstance(e, VarRef):
        return f"var:{e.name}"
    if isinstance(e, InputRef):
        return f"in:{e.name}"
    if isinstance(e, ParamRef):
        return f"param:{e.name}"
    if isinstance(e, Vec2Lit):
        return f"<{pretty_expr(e.x)}, {pretty_expr(e.y)}>"
    if isinstance(e, Unary):
        if e.op == "neg":
            s = f"-{pretty_expr(e.arg, _UNARY_PREC)}"
            return f"({s})" if parent_prec > _UNARY_PREC else s
        return f"{e.op}({pretty_expr(e.arg)})"
    if isinstance(e, Binary):
        if e.op in CALL_BINARY:
            return f"{e.op}({pretty_expr(e.left)}, {pretty_expr(e.right)})"
        prec = _PREC[e.op]
        left = pretty_expr(e.left, prec)
        # left-associative grammar: parenthesize right child at equal precedence
        right = pretty_expr(e.right, prec + 1)
        s = f"{left} {e.op} {right}"
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an expression: {e!r}")


def pretty_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, Return):
        return f"{pad}return {pretty_expr(s.value)};"
    if isinstance(s, Assign):
        return f"{pad}var:{s.name} := {pretty_expr(s.value)};"
    if isinstance(s, If):
        out = f"{pad}if ({pretty_expr(s.cond)}) {_pretty_branch(s.then, indent)}"
        if s.orelse != EMPTY_BLOCK:
            out += f" else {_pretty_branch(s.orelse, indent)}"
        return out
    if isinstance(s, Block):
        if not s.stmts:
            return f"{pad}{{ }}"
        inner = "\n".join(pretty_stmt(t, indent + 1) for t in s.stmts)
        return f"{pad}{{\n{inner}\n{pad}}}"
    raise TypeError(f"not a statement: {s!r}")


def _pretty_branch(s: Stmt, indent: int) -> str:
    # branches print inline (block braces or a single statement without padding)
    return pretty_stmt(s, indent).lstrip()


def pretty_fn(fn: TransitionFn) -> str:
    lines = []
    lines.append(f"states {{ {', '.join(fn.states)} }} start {fn.start} end {fn.end};")
    ins = ", ".join(f"{n}: {t}" for n, t in fn.inputs)
    lines.append(f"inputs {{ {ins} }};")
    vs = ", ".join(f"{n}: {t} = {pretty_value(v)}" for n, t, v in fn.vars)
    lines.append(f"vars {{ {vs} }};")
    lines.append(f"params {{ {', '.join(fn.params)} }};")
    lines.append(f"transition {pretty_stmt(fn.body).lstrip()}")
    return "\n".join(lines) + "\n"
