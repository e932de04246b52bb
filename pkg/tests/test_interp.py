import copy
import math
import random

import pytest

from srtr.errors import DivisionByZeroError, DomainError
from srtr.interp import (
    RSM, Env, check_trace_consistency, eval_expr, run_rsm, step_transition,
)
from srtr.parser import parse_rsm
from srtr.syntax import Binary, Const, InputRef, TraceElement, Unary


def env_of(tau, params):
    return Env(tau.state, tau.ins, dict(tau.vars), params)


def test_anglemod_residual_atom(tau5, worked_params):
    e = Unary("anglemod", Binary("-", InputRef("targetAng"), InputRef("robotAng")))
    assert eval_expr(e, env_of(tau5, worked_params)) == pytest.approx(math.pi / 60)


def test_lateral_offset_atom(tau5, worked_params):
    src = "norm(dot(<sin(in:robotAng), -cos(in:robotAng)>, in:ballLoc - in:robotLoc))"
    from srtr.parser import tokenize, _Parser
    e = _Parser(tokenize(src)).expr()
    assert eval_expr(e, env_of(tau5, worked_params)) == pytest.approx(40.0)


def test_sin_zero():
    assert eval_expr(Unary("sin", Const(0.0)), Env(None, {}, {}, {})) == 0.0


def test_anglemod_range():
    rng = random.Random(0)
    for _ in range(500):
        x = rng.uniform(-50, 50)
        r = eval_expr(Unary("anglemod", Const(x)), Env(None, {}, {}, {}))
        assert -math.pi < r <= math.pi
        assert math.isclose(math.sin(r), math.sin(x), abs_tol=1e-9)
    assert eval_expr(Unary("anglemod", Const(math.pi)), Env(None, {}, {}, {})) == math.pi
    assert eval_expr(Unary("anglemod", Const(-math.pi)), Env(None, {}, {}, {})) == math.pi


def test_division_by_zero():
    with pytest.raises(DivisionByZeroError):
        eval_expr(Binary("/", Const(1.0), Const(0.0)), Env(None, {}, {}, {}))


def test_anglemod_domain_error():
    with pytest.raises(DomainError):
        eval_expr(Unary("anglemod", Const(math.inf)), Env(None, {}, {}, {}))


def test_step_worked_example(attacker_fn, tau5, worked_params):
    assert step_transition(attacker_fn, tau5, worked_params) == "GOTO"
    nudged = dict(worked_params, maxDist=80.5)
    assert step_transition(attacker_fn, tau5, nudged) == "KICK"


def test_step_from_start_unconditional(attacker_fn, tau5, worked_params):
    tau = TraceElement(0, tau5.ins, tau5.vars, "START")
    assert step_transition(attacker_fn, tau, worked_params) == "GOTO"


def test_step_purity(attacker_fn, tau5, worked_params):
    tau_copy = copy.deepcopy(tau5)
    params_copy = dict(worked_params)
    step_transition(attacker_fn, tau5, worked_params)
    assert tau5 == tau_copy
    assert worked_params == params_copy


def test_run_rsm_zero_steps(attacker_fn, worked_params):
    rsm = RSM(attacker_fn, worked_params)
    assert run_rsm(rsm, iter(lambda: {}, None), 0) == []


def test_run_rsm_terminal_start():
    fn = parse_rsm('states { END } start END end END;\ninputs { };\nvars { };\n'
                   'params { };\ntransition { return state; }')
    trace = run_rsm(RSM(fn, {}), iter(lambda: {}, None), 10)
    assert len(trace) == 1 and trace[0].state == "END"


def test_run_rsm_snapshots_before_transition():
    fn = parse_rsm('states { A, B } start A end B;\ninputs { x: num };\nvars { };\n'
                   'params { };\ntransition { if (in:x > 0) { return "B"; } return "A"; }')
    stream = iter([{"x": 0.0}, {"x": 1.0}, {"x": 0.0}])
    trace = run_rsm(RSM(fn, {}), stream, 10)
    assert [e.state for e in trace] == ["A", "A", "B"]


def test_consistency_self_replay(attacker_fn, worked_params, worked_trace):
    assert check_trace_consistency(attacker_fn, worked_params, worked_trace) == []


def test_consistency_detects_param_change(attacker_fn, worked_params, worked_trace):
    nudged = dict(worked_params, maxDist=80.5)
    mismatches = check_trace_consistency(attacker_fn, nudged, worked_trace)
    assert (5, "KICK", "GOTO") in mismatches


def test_consistency_detects_corruption(attacker_fn, worked_params, worked_trace):
    corrupted = copy.deepcopy(worked_trace)
    corrupted[3].state = "KICK"
    mismatches = check_trace_consistency(attacker_fn, worked_params, corrupted)
    assert any(t in (2, 3) for t, _, _ in mismatches)


def test_vars_change_only_via_emission(attacker_fn, worked_params):
    # instrumented run: a counting emission is the only writer of vars, and
    # the state evolves only through the transition function
    seen = []

    def emission(state, ins, vars_):
        seen.append(state)
        return {}, dict(vars_, timeInKick=float(len(seen)))

    rsm = RSM(attacker_fn, worked_params, emission)
    ins = {"ballLoc": (30.0, 40.0), "robotLoc": (0.0, 0.0), "robotAng": 0.0,
           "targetAng": 0.05, "time": 0.0}
    trace = run_rsm(rsm, iter(lambda: dict(ins), None), 5)
    for k, elem in enumerate(trace):
        if k > 0:
            assert elem.vars["timeInKick"] == float(k)
        assert elem.state in attacker_fn.states
    assert [e.state for e in trace] == ["START"] + ["GOTO"] * 4


def test_replay_of_simulated_trace():
    # anything run_rsm produces must replay consistently
    from srtr import sim
    rsm = sim.make_rsm("attacker")
    sc = sim.gen_scenarios(3, 1, "attacker")[0]
    out = sim.simulate(rsm, sc)
    assert check_trace_consistency(rsm.transition, rsm.params, out.trace) == []
