import math
import random

from srtr.interp import step_transition
from srtr.parser import parse_rsm, parse_rsm_body
from srtr.peval import (
    classify_params, eval_residual, make_residual, peval,
    residual_is_closed, to_affine, walk_exprs,
)
from srtr.syntax import (
    Assign, Binary, Block, Const, If, InputRef, ParamRef, Return, Stmt,
    TraceElement, Unary, VarRef, pretty_stmt,
)

from genrsm import gen_instance

PI = math.pi


def simple_fn(body_src: str, states=("A", "B"), inputs=(), vars_=(), params=()):
    from srtr.syntax import TransitionFn
    from srtr.typecheck import typecheck
    fn = TransitionFn(tuple(states), states[0], states[-1], tuple(inputs),
                      tuple(vars_), tuple(params), parse_rsm_body(body_src))
    assert typecheck(fn) == [], typecheck(fn)
    return fn


# ---------------------------------------------------------------------------
# classification

def test_classify_worked_example(attacker_fn):
    rep, unrep = classify_params(attacker_fn)
    assert rep == ["aimMargin", "maxDist", "kickTimeout"]
    assert unrep == {"viewAng"}


def test_classify_trivial_body_keeps_all_params():
    fn = simple_fn('{ return state; }', params=("a", "b"))
    rep, unrep = classify_params(fn)
    assert rep == ["a", "b"] and unrep == set()


def test_classify_product_tie_breaks_right():
    fn = simple_fn('{ if (param:a * param:b > 1) { return "B"; } else return "A"; }',
                   params=("a", "b"))
    rep, unrep = classify_params(fn)
    assert rep == ["a"] and unrep == {"b"}


def test_classify_divisor_always_loses():
    fn = simple_fn('{ if (param:a / param:b > 1) { return "B"; } else return "A"; }',
                   params=("a", "b"))
    rep, unrep = classify_params(fn)
    assert rep == ["a"] and unrep == {"b"}


def test_classify_var_flow_reaches_nonlinear():
    fn = simple_fn('{ var:x := param:a + 1; var:y := sin(var:x); '
                   'if (var:y > 0) { return "B"; } else return "A"; }',
                   vars_=(("x", "num", 0.0), ("y", "num", 0.0)), params=("a",))
    rep, unrep = classify_params(fn)
    assert unrep == {"a"}


def test_classify_neq_forces_numeric_params():
    fn = simple_fn('{ if (param:a != 1) { return "B"; } else return "A"; }',
                   params=("a",))
    rep, unrep = classify_params(fn)
    assert unrep == {"a"}


def test_classify_monotone_under_new_nonlinear_occurrence():
    base = simple_fn('{ if (param:a > 1) { return "B"; } else return "A"; }', params=("a",))
    more = simple_fn('{ if (param:a > 1 && sin(param:a) > 0) { return "B"; } else return "A"; }',
                     params=("a",))
    rep0, _ = classify_params(base)
    _, unrep1 = classify_params(more)
    assert "a" in rep0 and "a" in unrep1


# ---------------------------------------------------------------------------
# make_residual

def atoms_of(stmt: Stmt):
    out = set()
    for e in walk_exprs(stmt):
        if isinstance(e, Binary) and e.op in ("<", ">", "<=", ">=", "==", "!="):
            out.add(e)
    return out


def test_worked_example_residual(attacker_fn, tau5, worked_params):
    res = make_residual(attacker_fn, tau5, worked_params)
    assert res.rep_params == ("aimMargin", "maxDist", "kickTimeout")
    assert res.unrep_params == {"viewAng"}
    assert residual_is_closed(res.body)
    # exactly two paths: KICK behind four affine atoms, else GOTO
    returns = {e.value for e in walk_exprs(res.body) if isinstance(e, Const)
               and isinstance(e.value, str)}
    assert returns == {"KICK", "GOTO"}
    got = {}
    for atom in atoms_of(res.body):
        lhs, rhs = to_affine(atom.left), to_affine(atom.right)
        diff = {p: c for p, c in (dict(rhs.coeffs if rhs else ()) or {}).items()}
        got[tuple(sorted(diff))] = (atom.op, lhs, rhs)
    # the four Fig-style atoms, as affine comparisons over the repairable set
    assert len(atoms_of(res.body)) == 4


def test_worked_example_residual_semantics(attacker_fn, tau5, worked_params):
    res = make_residual(attacker_fn, tau5, worked_params)
    assert eval_residual(res, worked_params) == "GOTO"
    assert eval_residual(res, dict(worked_params, maxDist=80.5)) == "KICK"
    assert eval_residual(res, dict(worked_params, maxDist=80.5, kickTimeout=3.0)) == "GOTO"
    assert eval_residual(res, dict(worked_params, maxDist=80.5, aimMargin=0.01)) == "GOTO"


def test_fully_concrete_guards_collapse_to_return(attacker_fn, tau5, worked_params):
    res = make_residual(attacker_fn, tau5,
                        dict(worked_params), extra_unrep=frozenset(attacker_fn.params))
    assert res.rep_params == ()
    flat = res.body
    while isinstance(flat, Block) and len(flat.stmts) == 1:
        flat = flat.stmts[0]
    assert flat == Return(Const("GOTO"))


def test_var_flow_into_guard():
    fn = simple_fn('{ var:x := param:p + 1; if (var:x > in:y) { return "B"; } else return "A"; }',
                   inputs=(("y", "num"),), vars_=(("x", "num", 0.0),), params=("p",))
    tau = TraceElement(0, {"y": 3.0}, {"x": 0.0}, "A")
    res = make_residual(fn, tau, {"p": 1.0})
    assert residual_is_closed(res.body)
    guard = next(e for e in walk_exprs(res.body)
                 if isinstance(e, Binary) and e.op == ">")
    aff = to_affine(guard.left)
    assert aff is not None and dict(aff.coeffs) == {"p": 1.0} and aff.const == 1.0
    assert to_affine(guard.right).const == 3.0


def test_guarded_assignment_forces_params():
    fn = simple_fn('{ if (param:p > 0) { var:x := param:q + 1; } else var:x := 2; '
                   'if (var:x > 1) { return "B"; } else return "A"; }',
                   vars_=(("x", "num", 0.0),), params=("p", "q"))
    tau = TraceElement(0, {}, {"x": 0.0}, "A")
    res = make_residual(fn, tau, {"p": 1.0, "q": 5.0})
    assert residual_is_closed(res.body)
    # q feeds an assignment under a retained conditional: forced unrepairable;
    # the diverging var then forces the guard's p as well
    assert "q" in res.unrep_params and "p" in res.unrep_params
    assert eval_residual(res, {}) == step_transition(fn, tau, {"p": 1.0, "q": 5.0})


def test_peval_identity_on_attacker(attacker_fn):
    assert peval(attacker_fn, {}) == attacker_fn.body


def test_peval_total_binding_equals_interpretation(attacker_fn, tau5, worked_params):
    bindings = {"state": tau5.state}
    bindings.update({f"in:{k}": v for k, v in tau5.ins.items()})
    bindings.update({f"var:{k}": v for k, v in tau5.vars.items()})
    bindings.update({f"param:{k}": v for k, v in worked_params.items()})
    body = peval(attacker_fn, bindings)
    flat = body
    while isinstance(flat, Block) and len(flat.stmts) == 1:
        flat = flat.stmts[0]
    expected = step_transition(attacker_fn, tau5, worked_params)
    assert flat == Return(Const(expected))


def _substitute_and_fold(stmt, bindings):
    """Independent oracle: textual substitution plus constant folding, with
    no environment threading."""
    from srtr.syntax import Vec2Lit, StateRef
    from srtr.syntax import UNARY_OPS, BINARY_OPS

    def sub(e):
        if isinstance(e, InputRef):
            key = f"in:{e.name}"
            return Const(bindings[key]) if key in bindings else e
        if isinstance(e, VarRef):
            key = f"var:{e.name}"
            return Const(bindings[key]) if key in bindings else e
        if isinstance(e, ParamRef):
            key = f"param:{e.name}"
            return Const(bindings[key]) if key in bindings else e
        if isinstance(e, StateRef):
            return Const(bindings["state"]) if "state" in bindings else e
        if isinstance(e, Unary):
            a = sub(e.arg)
            return Const(UNARY_OPS[e.op].fold(a.value)) if isinstance(a, Const) else Unary(e.op, a)
        if isinstance(e, Binary):
            l = sub(e.left)
            if e.op in ("&&", "||"):
                if isinstance(l, Const):
                    take = l.value if e.op == "&&" else not l.value
                    return sub(e.right) if take else l
                return Binary(e.op, l, sub(e.right))
            r = sub(e.right)
            if isinstance(l, Const) and isinstance(r, Const):
                return Const(BINARY_OPS[e.op].fold(l.value, r.value))
            return Binary(e.op, l, r)
        if isinstance(e, Vec2Lit):
            x, y = sub(e.x), sub(e.y)
            if isinstance(x, Const) and isinstance(y, Const):
                return Const((x.value, y.value))
            return Vec2Lit(x, y)
        return e

    def sub_stmt(s):
        if isinstance(s, Return):
            return Return(sub(s.value))
        if isinstance(s, Assign):
            return Assign(s.name, sub(s.value))
        if isinstance(s, If):
            return If(sub(s.cond), sub_stmt(s.then), sub_stmt(s.orelse))
        if isinstance(s, Block):
            return Block(tuple(sub_stmt(x) for x in s.stmts))
        raise TypeError(s)

    return sub_stmt(stmt)


def test_peval_partial_binding_matches_textual_substitution(attacker_fn):
    body = peval(attacker_fn, {"in:time": 5.0})
    assert body == _substitute_and_fold(attacker_fn.body, {"in:time": 5.0})


def test_peval_soundness_fuzz_small():
    failures = []
    for seed in range(300):
        fn, tau, params = gen_instance(seed)
        res = make_residual(fn, tau, params)
        assert residual_is_closed(res.body), f"seed {seed} not closed"
        got = eval_residual(res, params)
        want = step_transition(fn, tau, params)
        if got != want:
            failures.append((seed, got, want))
    assert not failures, failures[:5]


def test_residual_affinity_fuzz():
    # every comparison atom in a residual is degree <= 1 in the repairable
    # params: second differences vanish along every parameter direction
    rng = random.Random(1234)
    for seed in range(60):
        fn, tau, params = gen_instance(seed)
        res = make_residual(fn, tau, params)
        for e in walk_exprs(res.body):
            if isinstance(e, Binary) and e.op in ("<", ">", "<=", ">=", "==", "!="):
                for side in (e.left, e.right):
                    aff = to_affine(side)
                    assert aff is not None, f"seed {seed}: non-affine {pretty_stmt(Return(side))}"
                    _check_second_difference(side, res.rep_params, params, rng)


def _check_second_difference(expr, rep_params, params, rng):
    from srtr.interp import Env, eval_expr
    if not rep_params:
        return
    p = rng.choice(list(rep_params))
    base = {q: params.get(q, 1.0) for q in rep_params}
    h = 0.37

    def at(v):
        env = Env(None, {}, {}, dict(base, **{p: v}))
        return eval_expr(expr, env)

    x = base[p]
    second = at(x + h) - 2 * at(x) + at(x - h)
    assert abs(second) < 1e-6 * max(1.0, abs(at(x)))


def test_residual_forcing_keeps_soundness_with_guarded_assignments():
    # programs whose conditionals both guard assignments and feed later reads
    for seed in (7, 23, 77, 104, 250):
        fn, tau, params = gen_instance(seed)
        res = make_residual(fn, tau, params)
        assert eval_residual(res, params) == step_transition(fn, tau, params)


def test_classification_monotonicity_under_forcing():
    fn = simple_fn('{ if (param:a > 1) { return "B"; } else return "A"; }', params=("a",))
    rep, unrep = classify_params(fn, forced={"a"})
    assert rep == [] and unrep == {"a"}
