"""Dense two-phase simplex for the small L1 subproblems of the repair search.

Problems are min c.x subject to rows a.x {<=,>=,==} b with x >= 0.  Bland's
rule guarantees termination under degeneracy; speed is irrelevant at these
sizes (tens of variables, a few hundred rows).  Results are certified by a
residual check against the original rows before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-10
_CERT_TOL = 1e-9


@dataclass
class LPProblem:
    """min c.x  s.t.  rows (a, op, b) with op in {"<=", ">=", "=="}, x >= 0."""

    n: int
    c: list[float]
    rows: list[tuple[list[float], str, float]] = field(default_factory=list)

    def add(self, a: list[float], op: str, b: float):
        assert len(a) == self.n and op in ("<=", ">=", "==")
        self.rows.append((list(a), op, b))


@dataclass
class LPResult:
    status: str
    x: list[float] | None = None
    objective: float | None = None


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _simplex(T: np.ndarray, basis: list[int], ncols: int) -> str:
    """Minimize over tableau T (last row = reduced costs, last col = rhs)."""
    m = T.shape[0] - 1
    while True:
        # Bland: entering variable = lowest index with negative reduced cost
        col = -1
        for j in range(ncols):
            if T[-1, j] < -_PIVOT_TOL:
                col = j
                break
        if col < 0:
            return OPTIMAL
        # ratio test, Bland tie-break on lowest basis index
        best_ratio, row = None, -1
        for i in range(m):
            if T[i, col] > _PIVOT_TOL:
                ratio = T[i, -1] / T[i, col]
                if best_ratio is None or ratio < best_ratio - _PIVOT_TOL or (
                        abs(ratio - best_ratio) <= _PIVOT_TOL and basis[i] < basis[row]):
                    best_ratio, row = ratio, i
        if row < 0:
            return UNBOUNDED
        _pivot(T, basis, row, col)


def solve_lp(p: LPProblem) -> LPResult:
    """Solve p exactly enough to certify: constraint residuals <= 1e-9."""
    n, m = p.n, len(p.rows)
    if m == 0:
        # x = 0 is optimal iff c >= 0 (x >= 0 and no constraints)
        if any(ci < 0 for ci in p.c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, [0.0] * n, 0.0)

    # row scaling for conditioning; semantics preserved
    A = np.zeros((m, n))
    b = np.zeros(m)
    ops = []
    for i, (a, op, bi) in enumerate(p.rows):
        scale = max(max(abs(v) for v in a), abs(bi), 1e-12)
        A[i] = np.asarray(a) / scale
        b[i] = bi / scale
        ops.append(op)

    # canonical form: flip rows so rhs >= 0, add slack/surplus, then artificials
    slack_cols = []
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            ops[i] = {"<=": ">=", ">=": "<=", "==": "=="}[ops[i]]
        if ops[i] == "<=":
            slack_cols.append((i, 1.0))
        elif ops[i] == ">=":
            slack_cols.append((i, -1.0))

    nslack = len(slack_cols)
    ncols = n + nslack
    M = np.zeros((m, ncols))
    M[:, :n] = A
    for j, (i, sign) in enumerate(slack_cols):
        M[i, n + j] = sign

    # initial basis: slacks where they work (+1 coefficient), else artificials
    basis = [-1] * m
    for j, (i, sign) in enumerate(slack_cols):
        if sign > 0:
            basis[i] = n + j
    art_cols = [i for i in range(m) if basis[i] < 0]
    nart = len(art_cols)
    T = np.zeros((m + 1, ncols + nart + 1))
    T[:m, :ncols] = M
    T[:m, -1] = b
    for k, i in enumerate(art_cols):
        T[i, ncols + k] = 1.0
        basis[i] = ncols + k

    if nart:
        # phase 1: minimize sum of artificials
        for k in range(nart):
            T[-1, ncols + k] = 1.0
        for i in art_cols:
            T[-1] -= T[i]
        status = _simplex(T, basis, ncols + nart)
        if status != OPTIMAL:
            # phase 1 objective is bounded below by zero
            raise NumericalFailure("phase 1 of simplex did not converge")
        if -T[-1, -1] > 1e-8:  # tableau carries the negated objective
            return LPResult(INFEASIBLE)
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= ncols:
                piv = next((j for j in range(ncols) if abs(T[i, j]) > _PIVOT_TOL), None)
                if piv is None:
                    T[i, :] = 0.0  # redundant row
                else:
                    _pivot(T, basis, i, piv)

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = p.c
    for i in range(m):
        if 0 <= basis[i] < ncols and abs(T[-1, basis[i]]) > 0:
            T[-1] -= T[-1, basis[i]] * T[i]
    for k in range(nart):
        T[:, ncols + k] = 0.0  # retire artificial columns
    status = _simplex(T, basis, ncols)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)

    x = np.zeros(ncols)
    for i in range(m):
        if 0 <= basis[i] < ncols:
            x[basis[i]] = T[i, -1]
    xs = np.maximum(x[:n], 0.0)
    _certify(p, xs)
    return LPResult(OPTIMAL, [float(v) for v in xs], float(np.dot(p.c, xs)))


def _certify(p: LPProblem, x: np.ndarray):
    for a, op, b in p.rows:
        lhs = float(np.dot(a, x))
        tol = _CERT_TOL * max(1.0, abs(b), float(np.abs(a).sum()))
        ok = (lhs <= b + tol) if op == "<=" else (lhs >= b - tol) if op == ">=" \
            else abs(lhs - b) <= tol
        if not ok:
            raise NumericalFailure(
                f"certification failed: {lhs} {op} {b} violated beyond {tol}")
