"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with ``pytest -s tests/test_acceptance.py`` to see them)."""

import math
import random
import shutil
import os
import time

import pytest

from srtr import sim
from srtr.interp import step_transition
from srtr.peval import classify_params, eval_residual, make_residual
from srtr.repair import RepairProblem, correct_one, run_repair
from srtr.solver import solve_maxsmt
from srtr.syntax import Correction, TraceElement

from genrsm import gen_instance
from test_solver import brute_force_optimum, gen_problem

PI = math.pi


def report(name: str, ok: bool, detail: str = ""):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
          + (f"  ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------

def test_worked_example_reproduction(attacker_fn, worked_trace, worked_params,
                                     worked_corrections):
    t0 = time.perf_counter()
    rep, unrep = classify_params(attacker_fn)
    c5 = worked_corrections[0]
    tau5 = worked_trace[5]
    res = make_residual(attacker_fn, tau5, worked_params)
    phi = correct_one(attacker_fn, tau5, worked_params, c5)
    result = run_repair(attacker_fn, worked_params, worked_trace,
                        worked_corrections, penalty=1.0)
    replay = step_transition(attacker_fn, tau5, result.params)
    elapsed = time.perf_counter() - t0

    ok = rep == ["aimMargin", "maxDist", "kickTimeout"] and unrep == {"viewAng"}

    # residual logically equivalent to the four-atom conditional: exact atom
    # set of the single KICK path, plus semantic agreement with the
    # hand-coded conditional over a parameter probe grid
    atoms = {a.coeffs: (a.relop, a.rhs) for conj in phi.paths for a in conj}
    ok = ok and len(phi.paths) == 1 and len(phi.paths[0]) == 4
    want = {
        (("aimMargin", -1.0),): ("<", PI / 50 - PI / 60),
        (("maxDist", -1.0),): ("<", 30.0),
        (("maxDist", -0.49999999999999994),): ("<", 0.0),
        (("kickTimeout", -1.0),): (">", -1.0),
    }
    for coeffs, (relop, rhs) in want.items():
        got = atoms.get(coeffs)
        ok = ok and got is not None and got[0] == relop and abs(got[1] - rhs) < 1e-9

    def fig4c(am, md, kt):
        return "KICK" if (PI / 60 < am and 50 < md and 40 < md * 0.5
                          and 5 > 2 + (2 + (kt - 2))) else "GOTO"

    rng = random.Random(0)
    for _ in range(200):
        am = rng.uniform(0.01, 0.2)
        md = rng.uniform(60, 100)
        kt = rng.uniform(0.0, 3.0)
        probe = dict(worked_params, aimMargin=am, maxDist=md, kickTimeout=kt)
        ok = ok and eval_residual(res, probe) == fig4c(am, md, kt) \
            == step_transition(attacker_fn, TraceElement(5, tau5.ins, tau5.vars, "GOTO"), probe)

    ok = ok and abs(result.deltas["aimMargin"]) <= 1e-9
    ok = ok and abs(result.deltas["kickTimeout"]) <= 1e-9
    ok = ok and 0.0 < result.deltas["maxDist"] <= 1.0
    ok = ok and replay == "KICK"
    ok = ok and elapsed < 1.0
    report("worked-example-reproduction", ok,
           f"delta(maxDist)={result.deltas['maxDist']:.2e} replay={replay} "
           f"runtime={elapsed * 1000:.0f}ms")


def test_peval_soundness_fuzz():
    failures = 0
    for seed in range(1000):
        fn, tau, params = gen_instance(seed)
        res = make_residual(fn, tau, params)
        if eval_residual(res, params) != step_transition(fn, tau, params):
            failures += 1
    report("peval-soundness-fuzz", failures == 0, f"{1000 - failures}/1000 agree")


def test_formula_soundness_fuzz():
    rng = random.Random(2718)
    bad = 0
    total = 0
    satisfied_clauses = 0
    for seed in range(1000):
        fn, tau, params = gen_instance(seed)
        expected = rng.choice(fn.states)
        c = Correction(tau.t, expected)
        result = run_repair(fn, params, [tau], [c], penalty=1.0)
        total += 1
        if result.w[0] == 0.0:
            satisfied_clauses += 1
            if step_transition(fn, tau, result.params) != expected:
                bad += 1
    report("formula-soundness-fuzz", bad == 0,
           f"{satisfied_clauses} satisfied clauses, {bad} replay mismatches")


def test_optimality_oracle():
    rng = random.Random(31415)
    worst = 0.0
    for _ in range(200):
        rp = gen_problem(rng, max_clauses=3, max_params=3)
        sol = solve_maxsmt(rp)
        oracle = brute_force_optimum(rp)
        worst = max(worst, abs(sol.objective - oracle))
    report("optimality-oracle", worst <= 1e-6, f"max |internal - brute force| = {worst:.2e}")


def test_penalty_monotonicity():
    rng = random.Random(161803)
    violations_ok = True
    for trial in range(50):
        rp = gen_problem(rng, max_clauses=4, max_params=3)
        previous = None
        for h in (0.1, 1.0, 10.0, 100.0):
            sol = solve_maxsmt(RepairProblem(rp.clauses, h, rp.rep_params, rp.epsilon))
            violated = sum(1 for w in sol.w if w > 0)
            if previous is not None and violated > previous:
                violations_ok = False
            previous = violated
    report("penalty-monotonicity", violations_ok, "50 instances x H in {0.1,1,10,100}")


def _scaling_trace(attacker_fn, worked_trace, n_steps=46):
    tau = worked_trace[5]
    trace = []
    for t in range(n_steps):
        state = "START" if t == 0 else "GOTO"
        ins = dict(tau.ins, time=float(t))
        trace.append(TraceElement(t, ins, dict(tau.vars), state))
    return trace


def test_scaling_linear(attacker_fn, worked_trace, worked_params):
    trace = _scaling_trace(attacker_fn, worked_trace)
    corrections = [Correction(t, "KICK") for t in range(5, 45)]
    sizes = list(range(1, 41))
    medians = []
    for n in sizes:
        times = []
        for _ in range(3):
            t0 = time.perf_counter()
            result = run_repair(attacker_fn, worked_params, trace,
                                corrections[:n], penalty=1.0)
            times.append(time.perf_counter() - t0)
            assert all(result.satisfied)
        medians.append(sorted(times)[1])
    t40 = medians[-1]

    # least-squares linear fit and its R^2
    nbar = sum(sizes) / len(sizes)
    tbar = sum(medians) / len(medians)
    sxx = sum((n - nbar) ** 2 for n in sizes)
    sxy = sum((n - nbar) * (t - tbar) for n, t in zip(sizes, medians))
    slope = sxy / sxx
    intercept = tbar - slope * nbar
    ss_res = sum((t - (intercept + slope * n)) ** 2 for n, t in zip(sizes, medians))
    ss_tot = sum((t - tbar) ** 2 for t in medians)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    ok = t40 <= 1.0 and r2 >= 0.9
    report("scaling-linear", ok, f"t(40)={t40 * 1000:.1f}ms R^2={r2:.3f}")


def test_exhaustive_search_comparison():
    fn = sim.load_fn("attacker")
    good = sim.default_params("attacker")
    base = dict(good, aimMargin=0.01, maxDist=0.2)

    rng = random.Random(13)
    labeled = []
    for i in range(13):
        dist = rng.uniform(0.25, 1.4)
        ang = rng.uniform(-PI, PI)
        aim_err = rng.uniform(-0.3, 0.3)
        heading = 0.0
        ball = (dist * math.cos(ang), dist * math.sin(ang))
        tau = TraceElement(
            i,
            {"ballLoc": ball, "robotLoc": (0.0, 0.0), "robotAng": heading,
             "targetAng": aim_err, "time": 10.0 + i},
            {"lastKick": 0.0, "timeInKick": 0.0, "relLoc": (0.0, 0.0),
             "aimErr": 0.0, "robotYAxis": (0.0, 0.0), "relLocY": 0.0, "maxYLoc": 0.0},
            "GOTO")
        labeled.append((tau, step_transition(fn, tau, good)))

    lo = {"aimMargin": 0.005, "maxDist": 0.05}
    hi = {"aimMargin": 0.5, "maxDist": 2.0}
    grid = {p: [lo[p] + (hi[p] - lo[p]) * k / 99 for k in range(100)]
            for p in ("aimMargin", "maxDist")}

    t0 = time.perf_counter()
    grid_best = sim.exhaustive_search(fn, base, grid, labeled)
    grid_time = time.perf_counter() - t0
    grid_score = sum(1 for tau, want in labeled
                     if step_transition(fn, tau, grid_best) == want)

    trace = [tau for tau, _ in labeled]
    corrections = [Correction(tau.t, want) for tau, want in labeled]
    bounds = {p: (lo[p] - base[p], hi[p] - base[p]) for p in ("aimMargin", "maxDist")}
    t0 = time.perf_counter()
    result = run_repair(fn, base, trace, corrections, penalty=1000.0, bounds=bounds)
    srtr_time = time.perf_counter() - t0
    srtr_score = sum(result.satisfied)

    speedup = grid_time / srtr_time if srtr_time > 0 else float("inf")
    ok = srtr_score >= grid_score and speedup >= 100.0
    report("exhaustive-search-comparison", ok,
           f"satisfied {srtr_score} vs grid {grid_score}/13; "
           f"{grid_time:.2f}s vs {srtr_time * 1000:.0f}ms = {speedup:.0f}x")


def test_repair_improvement():
    lines = []
    ok = True
    for kind in sim.KINDS:
        fn = sim.load_fn(kind)
        good = sim.default_params(kind)
        bad = sim.detuned_params(kind)
        scens = sim.gen_scenarios(2026, 150, kind)
        before, outcomes = sim.success_rate(sim.make_rsm(kind, bad), scens)
        failing = next(o for o in outcomes if not o.success)
        corrections = sim.propose_corrections(fn, bad, good, failing.trace, limit=3)
        assert corrections, f"{kind}: no disagreement found in a failing trace"
        result = run_repair(fn, bad, failing.trace, corrections, penalty=1.0)
        after, _ = sim.success_rate(sim.make_rsm(kind, result.params), scens)
        lines.append(f"{kind} {before:.2f}->{after:.2f}")
        ok = ok and after > before
        if kind == "docker":
            ok = ok and after >= 0.9
    report("repair-improvement", ok, "; ".join(lines))


def _external_solver_cmd() -> str | None:
    cmd = os.environ.get("SRTR_SOLVER_CMD")
    if cmd:
        return cmd
    if shutil.which("z3"):
        return "z3"
    return None


def test_backend_agreement():
    cmd = _external_solver_cmd()
    if cmd is None:
        print("\nACCEPTANCE backend-agreement: SKIP (no external OMT solver configured; "
              "set SRTR_SOLVER_CMD or install z3)")
        pytest.skip("no external OMT solver configured")
    from srtr.smtlib import solve_via_subprocess
    rng = random.Random(97)
    worst = 0.0
    sets_equal = True
    for _ in range(100):
        rp = gen_problem(rng, max_clauses=3, max_params=3)
        internal = solve_maxsmt(rp)
        external = solve_via_subprocess(rp, cmd)
        worst = max(worst, abs(internal.objective - external.objective))
        sat_i = [w == 0.0 for w in internal.w]
        sat_e = [w == 0.0 for w in external.w]
        if sat_i != sat_e:
            sets_equal = False
    report("backend-agreement", worst <= 1e-6 and sets_equal,
           f"max objective gap {worst:.2e}")
