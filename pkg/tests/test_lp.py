import itertools
import random

import pytest

from srtr.lp import INFEASIBLE, LPProblem, OPTIMAL, UNBOUNDED, solve_lp


def l1_problem(n_params, rows):
    """min sum |d_i| with d_i = x_{2i} - x_{2i+1}; rows over the d variables."""
    p = LPProblem(2 * n_params, [1.0] * (2 * n_params))
    for coeffs, op, rhs in rows:
        row = []
        for c in coeffs:
            row.extend([c, -c])
        p.add(row, op, rhs)
    return p


def deltas(x):
    return [x[2 * i] - x[2 * i + 1] for i in range(len(x) // 2)]


def test_single_lower_bound():
    p = l1_problem(1, [([1.0], ">=", 0.5)])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(0.5, abs=1e-9)
    assert deltas(r.x)[0] == pytest.approx(0.5, abs=1e-9)


def test_contradictory_bounds_infeasible():
    p = l1_problem(1, [([1.0], ">=", 1.0), ([1.0], "<=", -1.0)])
    assert solve_lp(p).status == INFEASIBLE


def _grid_refine_oracle(objective, feasible, lo=-4.0, hi=4.0, step=1e-3):
    """2-D grid refinement around the best coarse point."""
    best = None
    coarse = 0.05
    pts = [lo + i * coarse for i in range(int((hi - lo) / coarse) + 1)]
    for a in pts:
        for b in pts:
            if feasible(a, b):
                v = objective(a, b)
                if best is None or v < best[0]:
                    best = (v, a, b)
    assert best is not None
    _, ca, cb = best
    fine = [i * step for i in range(-60, 61)]
    for da in fine:
        for db in fine:
            a, b = ca + da, cb + db
            if feasible(a, b):
                v = objective(a, b)
                if v < best[0]:
                    best = (v, a, b)
    return best[0]


def test_two_var_oracle():
    # min |d1| + |d2|  s.t.  d1 + d2 >= 2,  d1 <= 0.5
    p = l1_problem(2, [([1.0, 1.0], ">=", 2.0), ([1.0, 0.0], "<=", 0.5)])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    oracle = _grid_refine_oracle(
        lambda a, b: abs(a) + abs(b),
        lambda a, b: a + b >= 2.0 and a <= 0.5)
    assert r.objective == pytest.approx(oracle, abs=2e-3)
    assert r.objective == pytest.approx(2.0, abs=1e-9)
    d = deltas(r.x)
    assert d[0] + d[1] >= 2.0 - 1e-9 and d[0] <= 0.5 + 1e-9


def test_equality_row():
    p = l1_problem(2, [([1.0, -1.0], "==", 3.0)])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(3.0, abs=1e-9)


def test_unbounded():
    p = LPProblem(2, [-1.0, 0.0])
    p.add([0.0, 1.0], "<=", 1.0)
    assert solve_lp(p).status == UNBOUNDED


def test_no_rows_zero_is_optimal():
    p = LPProblem(4, [1.0, 1.0, 1.0, 1.0])
    r = solve_lp(p)
    assert r.status == OPTIMAL and r.objective == 0.0


def test_degenerate_rows_terminate():
    # duplicated and redundant rows exercise Bland's rule
    rows = [([1.0], ">=", 1.0)] * 5 + [([2.0], ">=", 2.0), ([1.0], "<=", 1.0)]
    p = l1_problem(1, rows)
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(1.0, abs=1e-9)


def _brute_force_vertices(rows, n=2):
    """Independent oracle: enumerate constraint-boundary intersections of the
    delta-space polyhedron plus sign-pattern boundaries."""
    import numpy as np
    cands = [(0.0,) * n]
    lines = [(np.array(a), b) for a, _, b in rows]
    axes = [(np.eye(n)[i], 0.0) for i in range(n)]
    for (a1, b1), (a2, b2) in itertools.combinations(lines + axes, 2):
        M = np.vstack([a1, a2])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.array([b1, b2]))
        cands.append(tuple(x))
    feasible = []
    for x in cands:
        ok = True
        for a, op, b in rows:
            v = sum(c * xi for c, xi in zip(a, x))
            if op == ">=" and v < b - 1e-9:
                ok = False
            if op == "<=" and v > b + 1e-9:
                ok = False
            if op == "==" and abs(v - b) > 1e-9:
                ok = False
        if ok:
            feasible.append(sum(abs(xi) for xi in x))
    return min(feasible) if feasible else None


def test_random_instances_match_vertex_enumeration():
    rng = random.Random(42)
    for trial in range(120):
        rows = []
        for _ in range(rng.randint(1, 4)):
            a = [rng.choice([-2, -1, 1, 2]) for _ in range(2)]
            op = rng.choice([">=", "<="])
            rows.append((a, op, round(rng.uniform(-2, 2), 3)))
        p = l1_problem(2, rows)
        r = solve_lp(p)
        oracle = _brute_force_vertices(rows)
        if oracle is None:
            assert r.status == INFEASIBLE, f"trial {trial}"
        else:
            assert r.status == OPTIMAL, f"trial {trial}"
            assert r.objective == pytest.approx(oracle, abs=1e-7), f"trial {trial}"
