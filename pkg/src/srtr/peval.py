"""Repairability analysis and partial evaluation of transition functions.

``classify_params`` splits the declared parameters into repairable and
unrepairable sets with a dataflow fixpoint: parameters reached by a
nonlinear operator, or tangled in parameter-by-parameter products or
divisions, cannot appear in linear constraints and are frozen at their
current values.

``peval`` specializes a transition body against a partial binding of
identifiers: bound identifiers are eliminated (assignments to them are
consumed into a symbolic environment and their uses substituted), constant
guards are folded and pruned, and guards that still mention free parameters
are retained with both branches specialized under the same incoming
environment.  ``make_residual`` wraps ``peval`` with the binding choice that
leaves only repairable parameters free, re-classifying with extra forced
parameters until the residual is closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NonAffineError
from .syntax import (
    Assign, Binary, Block, Const, Expr, If, InputRef, ParamMap, ParamRef,
    Return, StateRef, Stmt, TraceElement, TransitionFn, Unary, Value, VarRef,
    Vec2Lit, BINARY_OPS, EMPTY_BLOCK, UNARY_OPS,
)
from .interp import Env, exec_stmt

Bindings = dict[str, Value]  # keys: "state", "in:x", "var:x", "param:x"


# ---------------------------------------------------------------------------
# affine views of expressions

@dataclass(frozen=True)
class Affine:
    """const + sum(coeffs[p] * param p); the normal form behind residual atoms."""

    const: float
    coeffs: tuple[tuple[str, float], ...] = ()

    def coeff_map(self) -> dict[str, float]:
        return dict(self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs


def _mk_affine(const: float, coeffs: dict[str, float]) -> Affine:
    items = tuple(sorted((p, c) for p, c in coeffs.items() if c != 0.0))
    return Affine(const, items)


def _aff_add(a: Affine, b: Affine, sign: float = 1.0) -> Affine:
    coeffs = a.coeff_map()
    for p, c in b.coeffs:
        coeffs[p] = coeffs.get(p, 0.0) + sign * c
    return _mk_affine(a.const + sign * b.const, coeffs)


def _aff_scale(a: Affine, k: float) -> Affine:
    return _mk_affine(a.const * k, {p: c * k for p, c in a.coeffs})


def _aff_mul(a: Affine, b: Affine) -> Affine | None:
    if a.is_const():
        return _aff_scale(b, a.const)
    if b.is_const():
        return _aff_scale(a, b.const)
    return None


def to_affine(e: Expr) -> Affine | None:
    """Affine view of a numeric expression over free parameters, or None."""
    if isinstance(e, Const):
        if isinstance(e.value, bool) or not isinstance(e.value, (int, float)):
            return None
        return Affine(float(e.value))
    if isinstance(e, ParamRef):
        return _mk_affine(0.0, {e.name: 1.0})
    if isinstance(e, Unary):
        if e.op == "neg":
            a = to_affine(e.arg)
            return None if a is None else _aff_scale(a, -1.0)
        return None
    if isinstance(e, Binary):
        if e.op in ("+", "-"):
            a, b = to_affine(e.left), to_affine(e.right)
            if a is None or b is None:
                return None
            return _aff_add(a, b, 1.0 if e.op == "+" else -1.0)
        if e.op == "*":
            a, b = to_affine(e.left), to_affine(e.right)
            if a is None or b is None:
                return None
            return _aff_mul(a, b)
        if e.op == "/":
            a, b = to_affine(e.left), to_affine(e.right)
            if a is None or b is None or not b.is_const() or b.const == 0.0:
                return None
            return _aff_scale(a, 1.0 / b.const)
        if e.op == "dot":
            va, vb = vec_affine(e.left), vec_affine(e.right)
            if va is None or vb is None:
                return None
            xx = _aff_mul(va[0], vb[0])
            yy = _aff_mul(va[1], vb[1])
            if xx is None or yy is None:
                return None
            return _aff_add(xx, yy)
        return None
    return None


def vec_affine(e: Expr) -> tuple[Affine, Affine] | None:
    if isinstance(e, Const) and isinstance(e.value, tuple):
        return (Affine(e.value[0]), Affine(e.value[1]))
    if isinstance(e, Vec2Lit):
        x, y = to_affine(e.x), to_affine(e.y)
        if x is None or y is None:
            return None
        return (x, y)
    if isinstance(e, Unary) and e.op == "neg":
        v = vec_affine(e.arg)
        if v is None:
            return None
        return (_aff_scale(v[0], -1.0), _aff_scale(v[1], -1.0))
    if isinstance(e, Binary) and e.op in ("+", "-"):
        a, b = vec_affine(e.left), vec_affine(e.right)
        if a is None or b is None:
            return None
        sign = 1.0 if e.op == "+" else -1.0
        return (_aff_add(a[0], b[0], sign), _aff_add(a[1], b[1], sign))
    return None


# ---------------------------------------------------------------------------
# syntactic helpers

def walk_exprs(s: Stmt):
    if isinstance(s, Return):
        yield from _subexprs(s.value)
    elif isinstance(s, Assign):
        yield from _subexprs(s.value)
    elif isinstance(s, If):
        yield from _subexprs(s.cond)
        yield from walk_exprs(s.then)
        yield from walk_exprs(s.orelse)
    elif isinstance(s, Block):
        for sub in s.stmts:
            yield from walk_exprs(sub)


def _subexprs(e: Expr):
    yield e
    if isinstance(e, Unary):
        yield from _subexprs(e.arg)
    elif isinstance(e, Binary):
        yield from _subexprs(e.left)
        yield from _subexprs(e.right)
    elif isinstance(e, Vec2Lit):
        yield from _subexprs(e.x)
        yield from _subexprs(e.y)


def free_params(e: Expr) -> set[str]:
    return {sub.name for sub in _subexprs(e) if isinstance(sub, ParamRef)}


def free_vars_expr(e: Expr) -> set[str]:
    return {sub.name for sub in _subexprs(e) if isinstance(sub, VarRef)}


def free_vars_stmt(s: Stmt) -> set[str]:
    out: set[str] = set()
    if isinstance(s, Assign):
        out.add(s.name)
        out |= free_vars_expr(s.value)
    elif isinstance(s, Return):
        out |= free_vars_expr(s.value)
    elif isinstance(s, If):
        out |= free_vars_expr(s.cond)
        out |= free_vars_stmt(s.then)
        out |= free_vars_stmt(s.orelse)
    elif isinstance(s, Block):
        for sub in s.stmts:
            out |= free_vars_stmt(sub)
    return out


def assigned_vars(stmts) -> set[str]:
    out: set[str] = set()
    for s in stmts:
        if isinstance(s, Assign):
            out.add(s.name)
        elif isinstance(s, If):
            out |= assigned_vars([s.then, s.orelse])
        elif isinstance(s, Block):
            out |= assigned_vars(s.stmts)
    return out


# ---------------------------------------------------------------------------
# parameter classification

def _var_param_flow(fn: TransitionFn) -> dict[str, set[str]]:
    """May-analysis: for each var, the parameters that can flow into it."""
    flow: dict[str, set[str]] = {name: set() for name, _, _ in fn.vars}
    assigns = [s for s in walk_stmts(fn.body) if isinstance(s, Assign)]
    changed = True
    while changed:
        changed = False
        for a in assigns:
            deps = free_params(a.value)
            for v in free_vars_expr(a.value):
                deps |= flow.get(v, set())
            if not deps <= flow.setdefault(a.name, set()):
                flow[a.name] |= deps
                changed = True
    return flow


def walk_stmts(s: Stmt):
    yield s
    if isinstance(s, If):
        yield from walk_stmts(s.then)
        yield from walk_stmts(s.orelse)
    elif isinstance(s, Block):
        for sub in s.stmts:
            yield from walk_stmts(sub)


def classify_params(fn: TransitionFn,
                    forced: frozenset[str] | set[str] = frozenset()) -> tuple[list[str], set[str]]:
    """Split declared params into (repairable in declaration order, unrepairable).

    Fixpoint rules: params under a nonlinear unary operator with a
    param-dependent argument are unrepairable; for products (``*``, ``dot``)
    with both operands still param-dependent, the operand with fewer
    distinct still-repairable params loses (ties favor marking the right
    operand); a param-dependent divisor always loses; ``!=`` over numbers
    rejects param-dependent operands outright.
    """
    flow = _var_param_flow(fn)

    def pdeps(e: Expr) -> set[str]:
        deps = free_params(e)
        for v in free_vars_expr(e):
            deps |= flow.get(v, set())
        return deps

    unrep: set[str] = set(forced) & set(fn.params)
    changed = True
    while changed:
        changed = False
        for e in walk_exprs(fn.body):
            new: set[str] = set()
            if isinstance(e, Unary) and UNARY_OPS[e.op].linearity == "nonlinear":
                deps = pdeps(e.arg)
                if deps - unrep:
                    new = deps
            elif isinstance(e, Binary):
                lin = BINARY_OPS[e.op].linearity
                if lin == "bilinear":
                    lrep = pdeps(e.left) - unrep
                    rrep = pdeps(e.right) - unrep
                    if lrep and rrep:
                        loser = e.right if len(rrep) <= len(lrep) else e.left
                        new = pdeps(loser)
                elif lin == "division":
                    if pdeps(e.right) - unrep:
                        new = pdeps(e.right)
                elif e.op == "!=":
                    deps = pdeps(e.left) | pdeps(e.right)
                    if deps - unrep:
                        new = deps
            if new - unrep:
                unrep |= new
                changed = True
    rep = [p for p in fn.params if p not in unrep]
    return rep, unrep


# ---------------------------------------------------------------------------
# the specializer

@dataclass
class SpecInfo:
    """Side channel from one specialization pass, drives residual forcing."""

    guarded_assign_params: set[str] = field(default_factory=set)
    guard_escalation_params: set[str] = field(default_factory=set)


class _Specializer:
    def __init__(self, bindings: Bindings):
        self.eliminable = set(bindings)
        self.info = SpecInfo()

    # --- expressions ---

    def simplify(self, e: Expr, env: dict[str, Expr]) -> Expr:
        if isinstance(e, Const):
            return e
        if isinstance(e, StateRef):
            return env.get("state", e)
        if isinstance(e, VarRef):
            return env.get(f"var:{e.name}", e)
        if isinstance(e, InputRef):
            return env.get(f"in:{e.name}", e)
        if isinstance(e, ParamRef):
            return env.get(f"param:{e.name}", e)
        if isinstance(e, Vec2Lit):
            x = self.simplify(e.x, env)
            y = self.simplify(e.y, env)
            if isinstance(x, Const) and isinstance(y, Const):
                return Const((x.value, y.value))
            return Vec2Lit(x, y)
        if isinstance(e, Unary):
            arg = self.simplify(e.arg, env)
            if isinstance(arg, Const):
                return Const(UNARY_OPS[e.op].fold(arg.value))
            return Unary(e.op, arg)
        if isinstance(e, Binary):
            left = self.simplify(e.left, env)
            if e.op in ("&&", "||"):
                if isinstance(left, Const):
                    taken = left.value if e.op == "&&" else not left.value
                    if taken:
                        return self.simplify(e.right, env)
                    return left
                return Binary(e.op, left, self.simplify(e.right, env))
            right = self.simplify(e.right, env)
            if isinstance(left, Const) and isinstance(right, Const):
                return Const(BINARY_OPS[e.op].fold(left.value, right.value))
            return Binary(e.op, left, right)
        raise TypeError(f"not an expression: {e!r}")

    # --- statements ---

    def flush(self, touched: set[str], env: dict[str, Expr],
              materialize_touched: bool) -> list[Stmt]:
        """Invalidate env entries made stale by an assignment to ``touched``.

        Entries whose stored expression mentions a touched var are
        materialized as real assignments (their substituted value would
        otherwise read the new var value).  Entries keyed by a touched var
        are materialized only at retained-conditional merges, where a path
        may skip the branch assignment and needs the incoming value."""
        out = []
        for key in list(env):
            if not key.startswith("var:"):
                continue  # state/input/param entries are constants
            name = key.split(":", 1)[1]
            if name in touched:
                if materialize_touched:
                    out.append(Assign(name, env[key]))
                del env[key]
            elif free_vars_expr(env[key]) & touched:
                out.append(Assign(name, env[key]))
                del env[key]
        return out

    def spec_stmt(self, s: Stmt, env: dict[str, Expr],
                  retained: tuple[Expr, ...]) -> tuple[list[Stmt], bool]:
        if isinstance(s, Return):
            return [Return(self.simplify(s.value, env))], True

        if isinstance(s, Assign):
            rhs = self.simplify(s.value, env)
            key = f"var:{s.name}"
            pre = self.flush({s.name}, env, materialize_touched=False)
            if key in self.eliminable and not retained:
                env[key] = rhs
                return pre, False
            if retained:
                self.info.guarded_assign_params |= free_params(rhs)
                for g in retained:
                    self.info.guard_escalation_params |= free_params(g)
            return pre + [Assign(s.name, rhs)], False

        if isinstance(s, If):
            cond = self.simplify(s.cond, env)
            if isinstance(cond, Const):
                taken = s.then if cond.value else s.orelse
                stmts, term = self.spec_stmt(taken, env, retained)
                # splice a pruned block branch into the surrounding sequence
                if isinstance(taken, Block) and len(stmts) == 1 and isinstance(stmts[0], Block):
                    return list(stmts[0].stmts), term
                return stmts, term
            # retained conditional: both branches specialize under the same
            # incoming environment
            sub = retained + (cond,)
            then_stmts, then_term = self.spec_stmt(s.then, dict(env), sub)
            else_stmts, else_term = self.spec_stmt(s.orelse, dict(env), sub)
            touched = assigned_vars(then_stmts) | assigned_vars(else_stmts)
            pre = self.flush(touched, env, materialize_touched=True) if touched else []
            node = If(cond, _reshape(s.then, then_stmts), _reshape(s.orelse, else_stmts))
            return pre + [node], then_term and else_term

        if isinstance(s, Block):
            out: list[Stmt] = []
            for sub in s.stmts:
                stmts, term = self.spec_stmt(sub, env, retained)
                out.extend(stmts)
                if term:
                    return [Block(tuple(out))], True
            return [Block(tuple(out))], False
        raise TypeError(f"not a statement: {s!r}")


def _reshape(original: Stmt, stmts: list[Stmt]) -> Stmt:
    """Preserve the original branch shape when specialization kept one stmt."""
    if isinstance(original, Block):
        if len(stmts) == 1 and isinstance(stmts[0], Block):
            return stmts[0]
        return Block(tuple(stmts))
    if len(stmts) == 1:
        return stmts[0]
    if not stmts:
        return EMPTY_BLOCK
    return Block(tuple(stmts))


def _bindings_to_env(bindings: Bindings) -> dict[str, Expr]:
    return {key: Const(v) for key, v in bindings.items()}


def peval(fn: TransitionFn, bindings: Bindings) -> Block:
    """Specialize fn's body, eliminating the bound identifiers.

    Binding keys are ``"state"``, ``"in:name"``, ``"var:name"`` and
    ``"param:name"``.  With no bindings the body comes back structurally
    identical (up to folding of constant subexpressions and dead code after
    a return); with every identifier bound it collapses to the single Return
    that concrete interpretation would reach.
    """
    body, _ = _specialize(fn, bindings)
    return body


def _specialize(fn: TransitionFn, bindings: Bindings) -> tuple[Block, SpecInfo]:
    spec = _Specializer(bindings)
    stmts, _ = spec.spec_stmt(fn.body, _bindings_to_env(bindings), ())
    if len(stmts) == 1 and isinstance(stmts[0], Block):
        body = stmts[0]
    else:
        body = Block(tuple(stmts))
    return body, spec.info


# ---------------------------------------------------------------------------
# residuals

@dataclass
class ResidualFn:
    """A transition body specialized against one trace element: the only free
    identifiers are repairable parameters."""

    body: Block
    rep_params: tuple[str, ...]
    unrep_params: frozenset[str]
    tau: TraceElement
    params: ParamMap


def residual_is_closed(body: Stmt) -> bool:
    if free_vars_stmt(body):
        return False
    for e in walk_exprs(body):
        if isinstance(e, (InputRef, StateRef)):
            return False
    return True


def make_residual(fn: TransitionFn, tau: TraceElement, params: ParamMap,
                  extra_unrep: frozenset[str] | set[str] = frozenset()) -> ResidualFn:
    """Partial evaluation of fn against one trace element.

    Inputs, variables, the current state, and unrepairable parameters are
    substituted with concrete values; repairable parameters stay symbolic.
    Assignments surviving under retained conditionals force the parameters
    their right-hand sides depend on into the unrepairable set (escalating
    to the guards' parameters when that alone cannot close the residual),
    and classification reruns until the residual contains only parameter
    references.
    """
    forced: set[str] = set(extra_unrep)
    for _ in range(len(fn.params) + 2):
        rep, unrep = classify_params(fn, forced)
        bindings: Bindings = {"state": tau.state}
        bindings.update({f"in:{k}": v for k, v in tau.ins.items()})
        bindings.update({f"var:{k}": v for k, v in tau.vars.items()})
        bindings.update({f"param:{p}": params[p] for p in unrep})
        body, info = _specialize(fn, bindings)
        if residual_is_closed(body):
            return ResidualFn(body, tuple(rep), frozenset(unrep), tau, dict(params))
        new = info.guarded_assign_params - unrep
        if not new:
            new = info.guard_escalation_params - unrep
        if not new:
            new = set(rep)
        if not new:
            break
        forced |= new
    raise NonAffineError("partial evaluation failed to close the residual")


def eval_residual(res: ResidualFn, params: ParamMap) -> str:
    """Run a residual body concretely under the given parameter values."""
    env = Env(None, {}, {}, dict(params))
    result = exec_stmt(res.body, env)
    if result is None:
        raise NonAffineError("residual body finished without returning a state")
    return result
