"""Concrete evaluation: expressions, single transitions, and full RSM runs.

Evaluation is strict IEEE double-precision with short-circuit ``&&``/``||``.
Float comparisons are exact; tolerance policies live entirely in the
constraint lowering, never here, so replaying a logged trace is bit-for-bit
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .errors import EvalError, StepError, UnboundIdentifierError
from .syntax import (
    Assign, Binary, Block, Const, Expr, If, InputRef, ParamMap, ParamRef,
    Return, StateRef, Stmt, Trace, TraceElement, TransitionFn, Unary, Value,
    VarRef, Vec2Lit, BINARY_OPS, UNARY_OPS,
)


@dataclass
class Env:
    state: str | None
    ins: dict[str, Value]
    vars: dict[str, Value]
    params: dict[str, float]


def eval_expr(e: Expr, env: Env) -> Value:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, StateRef):
        if env.state is None:
            raise UnboundIdentifierError("state is not bound in this environment")
        return env.state
    if isinstance(e, VarRef):
        if e.name not in env.vars:
            raise UnboundIdentifierError(f"var:{e.name} is not bound")
        return env.vars[e.name]
    if isinstance(e, InputRef):
        if e.name not in env.ins:
            raise UnboundIdentifierError(f"in:{e.name} is not bound")
        return env.ins[e.name]
    if isinstance(e, ParamRef):
        if e.name not in env.params:
            raise UnboundIdentifierError(f"param:{e.name} is not bound")
        return env.params[e.name]
    if isinstance(e, Vec2Lit):
        return (eval_expr(e.x, env), eval_expr(e.y, env))
    if isinstance(e, Unary):
        return UNARY_OPS[e.op].fold(eval_expr(e.arg, env))
    if isinstance(e, Binary):
        if e.op == "&&":
            return bool(eval_expr(e.left, env)) and bool(eval_expr(e.right, env))
        if e.op == "||":
            return bool(eval_expr(e.left, env)) or bool(eval_expr(e.right, env))
        return BINARY_OPS[e.op].fold(eval_expr(e.left, env), eval_expr(e.right, env))
    raise TypeError(f"not an expression: {e!r}")


def exec_stmt(s: Stmt, env: Env) -> str | None:
    """Execute a statement; returns the next state when a Return is reached."""
    if isinstance(s, Return):
        return eval_expr(s.value, env)
    if isinstance(s, Assign):
        env.vars[s.name] = eval_expr(s.value, env)
        return None
    if isinstance(s, If):
        branch = s.then if eval_expr(s.cond, env) else s.orelse
        return exec_stmt(branch, env)
    if isinstance(s, Block):
        for sub in s.stmts:
            result = exec_stmt(sub, env)
            if result is not None:
                return result
        return None
    raise TypeError(f"not a statement: {s!r}")


def step_transition(fn: TransitionFn, tau: TraceElement, params: ParamMap) -> str:
    """Run the transition body once against one trace element.

    Variable assignments are local to the step: the transition can never
    mutate the persistent program variables, only the emission function can.
    """
    env = Env(tau.state, dict(tau.ins), dict(tau.vars), dict(params))
    result = exec_stmt(fn.body, env)
    if result is None:
        raise EvalError("transition body finished without returning a state")
    return result


# emission: (state, ins, vars) -> (outputs, updated vars)
Emission = Callable[[str, dict[str, Value], dict[str, Value]], tuple[dict, dict[str, Value]]]


def _no_emission(state, ins, vars_):
    return {}, vars_


@dataclass
class RSM:
    """A transition function paired with an emission controller and state."""

    transition: TransitionFn
    params: ParamMap
    emission: Emission = _no_emission
    init_vars: dict[str, Value] = field(default_factory=dict)
    start: str | None = None

    def initial_vars(self) -> dict[str, Value]:
        vars_ = dict(self.transition.var_init)
        vars_.update(self.init_vars)
        return vars_


def run_rsm(rsm: RSM, input_stream: Iterable[dict[str, Value]], max_steps: int) -> Trace:
    """Execute the RSM, recording each step's snapshot before its transition.

    Stops after recording a snapshot in the end state, after max_steps, or
    when the input stream is exhausted (closed-loop simulators end runs by
    stopping the stream).
    """
    fn = rsm.transition
    state = rsm.start if rsm.start is not None else fn.start
    vars_ = rsm.initial_vars()
    trace: Trace = []
    stream: Iterator[dict[str, Value]] = iter(input_stream)
    for t in range(max_steps):
        try:
            ins = next(stream)
        except StopIteration:
            break
        trace.append(TraceElement(t, dict(ins), dict(vars_), state))
        if state == fn.end:
            break
        try:
            state = step_transition(fn, trace[-1], rsm.params)
            _, vars_ = rsm.emission(state, dict(ins), dict(vars_))
        except EvalError as e:
            raise StepError(t, e) from e
    return trace


def check_trace_consistency(fn: TransitionFn, params: ParamMap,
                            trace: Trace) -> list[tuple[int, str, str]]:
    """Replay each transition and report (t, expected_by_replay, recorded)."""
    mismatches = []
    for prev, nxt in zip(trace, trace[1:]):
        expected = step_transition(fn, prev, params)
        if expected != nxt.state:
            mismatches.append((prev.t, expected, nxt.state))
    return mismatches
