"""Exact MaxSMT-over-linear-real-arithmetic engine for repair problems.

Search space: per correction either pay the penalty H or pick one disjunct
of its path formula; satisfied choices contribute their atoms to one shared
L1 LP.  Nodes expand best-first on a lower bound (H * violations so far +
the LP value of the constraints chosen so far), which never decreases along
a branch, so the first fully-assigned node popped is globally optimal.
Ties are resolved by a lexicographic secondary pass over |delta|.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import NumericalFailure, SolverError
from .lp import INFEASIBLE, LPProblem, OPTIMAL, UNBOUNDED, solve_lp
from .repair import Conjunction, LinAtom, RepairProblem

_TIE_TOL = 1e-9
# equal-objective leaves kept for the lexicographic tie-break; corrections
# whose formulas have several simultaneously-satisfiable disjuncts would
# otherwise make tie enumeration combinatorial
_MAX_TIES = 8


def interior_margin(epsilon: float) -> float:
    """Margin applied to non-strict atoms at LP-lowering time; far below the
    strict-inequality epsilon but far above float noise."""
    return min(epsilon * 1e-2, 1e-6)


@dataclass
class MaxSmtSolution:
    deltas: dict[str, float]
    w: list[float]
    objective: float
    subproblems: int = 0
    lp_calls: int = 0


@dataclass(order=True)
class _Node:
    # best-first on bound; deeper first among equal bounds so the search
    # dives to a complete assignment instead of sweeping each level
    bound: float
    depth_rank: int
    seq: int
    choices: tuple[int, ...] = field(compare=False)  # path index or -1 = violated
    x: list[float] | None = field(compare=False, default=None)  # optimum so far

    @property
    def nclause(self) -> int:
        return len(self.choices)


class _LPBuilder:
    """Shared lowering of atom sets to the L1 LP over split deltas."""

    def __init__(self, rp: RepairProblem):
        self.rp = rp
        self.params = list(rp.rep_params)
        self.index = {p: i for i, p in enumerate(self.params)}
        self.n = 2 * len(self.params)  # delta+ then delta- per param
        self.lp_calls = 0

    def _row(self, atom: LinAtom) -> list[tuple[list[float], str, float]]:
        coeffs = [0.0] * self.n
        for p, c in atom.coeffs:
            if p not in self.index:
                raise SolverError(f"atom mentions unknown parameter {p}")
            i = self.index[p]
            coeffs[2 * i] = c
            coeffs[2 * i + 1] = -c
        eps = self.rp.epsilon
        # non-strict atoms get a tiny interior margin so LP vertices do not
        # sit exactly on a boundary where float replay could flip a branch
        mu = interior_margin(eps)
        if atom.relop == "<":
            return [(coeffs, "<=", atom.rhs - eps)]
        if atom.relop == "<=":
            return [(coeffs, "<=", atom.rhs - mu)]
        if atom.relop == ">":
            return [(coeffs, ">=", atom.rhs + eps)]
        if atom.relop == ">=":
            return [(coeffs, ">=", atom.rhs + mu)]
        if atom.relop == "==":
            return [(coeffs, "==", atom.rhs)]
        raise SolverError(f"unsupported relop {atom.relop}")

    def base_problem(self, objective: list[float] | None = None) -> LPProblem:
        c = objective if objective is not None else [1.0] * self.n
        lp = LPProblem(self.n, list(c))
        for p, (lo, hi) in self.rp.bounds.items():
            if p not in self.index:
                continue
            i = self.index[p]
            row = [0.0] * self.n
            row[2 * i] = 1.0
            row[2 * i + 1] = -1.0
            if hi is not None and hi != float("inf"):
                lp.add(row, "<=", hi)
            if lo is not None and lo != float("-inf"):
                lp.add(row, ">=", lo)
        return lp

    def add_conjunction(self, lp: LPProblem, conj: Conjunction):
        for atom in conj:
            for row in self._row(atom):
                lp.add(*row)

    def solve(self, conjs: list[Conjunction],
              objective: list[float] | None = None,
              extra_rows: list[tuple[list[float], str, float]] | None = None):
        lp = self.base_problem(objective)
        for conj in conjs:
            self.add_conjunction(lp, conj)
        for row in (extra_rows or []):
            lp.add(*row)
        self.lp_calls += 1
        return solve_lp(lp)

    def satisfied_by(self, conj: Conjunction, x: list[float]) -> bool:
        """Exact check of the (margin-relaxed) rows at a known point; lets a
        node inherit its parent's optimum without re-solving when the new
        clause is already satisfied."""
        for atom in conj:
            for coeffs, op, rhs in self._row(atom):
                lhs = sum(c * xi for c, xi in zip(coeffs, x))
                if op == "<=" and not lhs <= rhs:
                    return False
                if op == ">=" and not lhs >= rhs:
                    return False
                if op == "==" and not abs(lhs - rhs) <= 1e-12:
                    return False
        return True

    def deltas_from(self, x: list[float]) -> dict[str, float]:
        return {p: x[2 * i] - x[2 * i + 1] for p, i in self.index.items()}


def _chosen_conjs(rp: RepairProblem, choices: tuple[int, ...]) -> list[Conjunction]:
    return [rp.clauses[i].paths[k] for i, k in enumerate(choices) if k >= 0]


def solve_maxsmt(rp: RepairProblem) -> MaxSmtSolution:
    """Global minimum of H * violations + sum |delta| over the repair problem."""
    builder = _LPBuilder(rp)
    n = len(rp.clauses)
    root = builder.solve([])
    if root.status != OPTIMAL:
        raise SolverError("delta bounds admit no feasible point")
    heap: list[_Node] = []
    seq = 0
    heapq.heappush(heap, _Node(root.objective, n, seq, (), root.x))
    best: float | None = None
    optimal: list[tuple[int, ...]] = []
    subproblems = 0

    while heap:
        node = heapq.heappop(heap)
        subproblems += 1
        if best is not None and node.bound > best + _TIE_TOL:
            break
        if node.nclause == n:
            if best is None or node.bound < best - _TIE_TOL:
                best = node.bound
                optimal = [node.choices]
            elif abs(node.bound - best) <= _TIE_TOL and len(optimal) < _MAX_TIES:
                optimal.append(node.choices)
            if len(optimal) >= _MAX_TIES:
                break
            continue
        i = node.nclause
        viol = sum(1 for k in node.choices if k < 0)
        options: list[int] = [-1] + list(range(len(rp.clauses[i].paths)))
        for k in options:
            choices = node.choices + (k,)
            nviol = viol + (1 if k < 0 else 0)
            if k < 0:
                # constraints unchanged: the parent optimum carries over
                child = _Node(node.bound + rp.penalty, n - i - 1, seq + 1,
                              choices, node.x)
            elif node.x is not None and builder.satisfied_by(rp.clauses[i].paths[k], node.x):
                # already satisfied at the parent optimum: adding the rows
                # cannot move it, so the bound stays exact without an LP
                child = _Node(node.bound, n - i - 1, seq + 1, choices, node.x)
            else:
                res = builder.solve(_chosen_conjs(rp, choices))
                if res.status == INFEASIBLE:
                    continue
                if res.status == UNBOUNDED:
                    raise NumericalFailure("L1 subproblem unbounded")
                child = _Node(nviol * rp.penalty + res.objective, n - i - 1,
                              seq + 1, choices, res.x)
            if best is not None and child.bound > best + _TIE_TOL:
                continue
            seq += 1
            heapq.heappush(heap, child)

    if best is None:
        # violating everything is always feasible, so this cannot happen
        # unless the bounds exclude delta = 0
        raise SolverError("repair problem has no feasible assignment")

    choice, deltas = _tie_break(rp, builder, optimal, best)
    w = [rp.penalty if k < 0 else 0.0 for k in choice]
    _certify_solution(rp, choice, deltas)
    objective = sum(w) + sum(abs(d) for d in deltas.values())
    return MaxSmtSolution(deltas, w, objective, subproblems, builder.lp_calls)


def _lex_minimize(rp: RepairProblem, builder: _LPBuilder,
                  choices: tuple[int, ...], total: float) -> tuple[list[float], dict[str, float]]:
    """Among optima of one leaf, make (|d_1|, |d_2|, ...) lexicographically
    smallest in declaration order, then prefer positive signs."""
    if not builder.params:
        return [], {}
    conjs = _chosen_conjs(rp, choices)
    m = len(builder.params)
    extra: list[tuple[list[float], str, float]] = []
    ones = [1.0] * builder.n
    extra.append((ones, "<=", total + _TIE_TOL))
    mags: list[float] = []
    for i in range(m):
        obj = [0.0] * builder.n
        obj[2 * i] = 1.0
        obj[2 * i + 1] = 1.0
        res = builder.solve(conjs, objective=obj, extra_rows=extra)
        if res.status != OPTIMAL:
            raise NumericalFailure("lexicographic pass lost feasibility")
        mags.append(res.objective)
        row = [0.0] * builder.n
        row[2 * i] = 1.0
        row[2 * i + 1] = 1.0
        extra.append((row, "<=", res.objective + _TIE_TOL))
    # final pass: prefer positive deltas among equal-magnitude optima
    obj = [0.0] * builder.n
    for i in range(m):
        obj[2 * i + 1] = 1.0
    res = builder.solve(conjs, objective=obj, extra_rows=extra)
    if res.status != OPTIMAL:
        raise NumericalFailure("sign-preference pass lost feasibility")
    return mags, builder.deltas_from(res.x)


def _tie_break(rp: RepairProblem, builder: _LPBuilder,
               optimal: list[tuple[int, ...]], best: float):
    # among equal-objective optima: satisfy more corrections first, then the
    # lexicographically smallest |delta| vector in declaration order
    ranked = []
    for choices in sorted(set(optimal)):
        viol = sum(1 for k in choices if k < 0)
        total = best - viol * rp.penalty
        mags, deltas = _lex_minimize(rp, builder, choices, max(total, 0.0))
        ranked.append((viol, mags, choices, deltas))
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))
    _, _, choices, deltas = ranked[0]
    return choices, deltas


def _certify_solution(rp: RepairProblem, choices: tuple[int, ...],
                      deltas: dict[str, float]):
    """Every clause claimed satisfied must hold with strict relops strict."""
    for i, k in enumerate(choices):
        if k < 0:
            continue
        conj = rp.clauses[i].paths[k]
        for atom in conj:
            if not atom.holds_certified(deltas):
                raise NumericalFailure(
                    f"clause {i} atom {atom.pretty()} not strictly satisfied")
