"""Lowering corrections to constraint formulas and running the repair.

``correct_one`` symbolically executes a residual: every root-to-return path
whose returned state matches the correction contributes the conjunction of
its branch conditions, with each repairable parameter x rewritten to
P(x) + delta_x.  ``correct_all`` attaches one penalty per correction;
``run_repair`` hands the problem to a backend and verifies the result by
concrete replay.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import NonAffineError, SolverError, UnknownStateError
from .interp import step_transition
from .peval import Affine, ResidualFn, classify_params, make_residual, to_affine, _aff_add
from .syntax import (
    Assign, Binary, Block, Const, Correction, DeltaMap, Expr, If, ParamMap,
    Return, Stmt, Trace, TraceElement, TransitionFn, COMPARISON_OPS,
)

# satisfaction tolerance for == atoms over reals (strict relops stay strict)
_EQ_TOL = 1e-9


@dataclass(frozen=True)
class LinAtom:
    """sum(coeffs[p] * delta_p) relop rhs, relop in {<, <=, >, >=, ==}."""

    coeffs: tuple[tuple[str, float], ...]
    relop: str
    rhs: float

    def lhs_at(self, deltas: DeltaMap) -> float:
        return sum(c * deltas.get(p, 0.0) for p, c in self.coeffs)

    def holds(self, deltas: DeltaMap) -> bool:
        """Exact satisfaction: strict relops strict, non-strict exact."""
        lhs = self.lhs_at(deltas)
        if self.relop == "<":
            return lhs < self.rhs
        if self.relop == "<=":
            return lhs <= self.rhs
        if self.relop == ">":
            return lhs > self.rhs
        if self.relop == ">=":
            return lhs >= self.rhs
        return abs(lhs - self.rhs) <= _EQ_TOL

    def holds_certified(self, deltas: DeltaMap, tol: float = 1e-9) -> bool:
        """Certification check: strict relops stay strict (the epsilon margin
        guarantees slack); non-strict relops allow numerical tolerance."""
        lhs = self.lhs_at(deltas)
        if self.relop == "<":
            return lhs < self.rhs
        if self.relop == "<=":
            return lhs <= self.rhs + tol
        if self.relop == ">":
            return lhs > self.rhs
        if self.relop == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= max(tol, _EQ_TOL)

    def pretty(self) -> str:
        terms = " + ".join(f"{c:g}*d.{p}" for p, c in self.coeffs) or "0"
        return f"{terms} {self.relop} {self.rhs:g}"


Conjunction = tuple[LinAtom, ...]


@dataclass
class PathFormula:
    """Disjunction of conjunctions of affine atoms over delta variables.

    ``[]`` is the empty disjunction (unsatisfiable); a formula containing an
    empty conjunction is trivially true.
    """

    paths: list[Conjunction]

    def satisfiable_trivially(self) -> bool:
        return any(len(c) == 0 for c in self.paths)

    def holds(self, deltas: DeltaMap) -> bool:
        return any(all(a.holds(deltas) for a in conj) for conj in self.paths)


@dataclass
class RepairProblem:
    clauses: list[PathFormula]          # one per correction
    penalty: float                      # H
    rep_params: tuple[str, ...]         # delta index set, declaration order
    epsilon: float                      # strict-inequality margin
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)


@dataclass
class SolverStats:
    time_ms: float = 0.0
    subproblems: int = 0
    lp_calls: int = 0


@dataclass
class RepairResult:
    params: ParamMap                    # old + deltas on Rep, unchanged on Unrep
    deltas: DeltaMap
    satisfied: list[bool]               # verified by concrete replay
    objective: float
    stats: SolverStats
    w: list[float] = field(default_factory=list)
    rep_params: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# formula construction

def _delta_atom(lhs: Affine, relop: str, rhs: Affine, params: ParamMap) -> LinAtom:
    """Rewrite x -> P(x) + delta_x in ``lhs relop rhs`` and normalize to
    coeffs . delta relop const."""
    diff = _aff_add(lhs, rhs, -1.0)  # lhs - rhs (affine over params)
    const = diff.const + sum(c * params[p] for p, c in diff.coeffs)
    return LinAtom(diff.coeffs, relop, -const)


_NEG_RELOP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _atom_dnf(e: Expr, negate: bool, params: ParamMap) -> list[Conjunction]:
    """DNF of a guard expression (or its negation) as delta atoms."""
    if isinstance(e, Const):
        truth = bool(e.value) != negate
        return [()] if truth else []
    if isinstance(e, Binary) and e.op in ("&&", "||"):
        conj = (e.op == "&&") != negate
        left = _atom_dnf(e.left, negate, params)
        right = _atom_dnf(e.right, negate, params)
        if conj:
            return [a + b for a in left for b in right]
        return left + right
    if isinstance(e, Binary) and e.op in COMPARISON_OPS:
        relop = _NEG_RELOP[e.op] if negate else e.op
        lhs, rhs = to_affine(e.left), to_affine(e.right)
        if lhs is None or rhs is None:
            raise NonAffineError(f"non-affine atom in residual guard: {e}")
        if relop == "==":
            le = _delta_atom(lhs, "<=", rhs, params)
            ge = _delta_atom(lhs, ">=", rhs, params)
            return [(le, ge)]
        if relop == "!=":
            lt = _delta_atom(lhs, "<", rhs, params)
            gt = _delta_atom(lhs, ">", rhs, params)
            return [(lt,), (gt,)]
        return [(_delta_atom(lhs, relop, rhs, params),)]
    raise NonAffineError(f"unsupported residual guard: {e}")


def _residual_paths(s: Stmt) -> list[tuple[list[tuple[Expr, bool]], str | None]]:
    """All (branch conditions with polarity, returned state) paths."""
    if isinstance(s, Return):
        if not isinstance(s.value, Const) or not isinstance(s.value.value, str):
            raise NonAffineError("residual return is not a concrete state")
        return [([], s.value.value)]
    if isinstance(s, Assign):
        raise NonAffineError("residual contains a variable assignment")
    if isinstance(s, If):
        out = []
        for (conds, state) in _residual_paths(s.then):
            out.append(([(s.cond, False)] + conds, state))
        for (conds, state) in _residual_paths(s.orelse):
            out.append(([(s.cond, True)] + conds, state))
        return out
    if isinstance(s, Block):
        return _paths_seq(list(s.stmts))
    raise TypeError(f"not a statement: {s!r}")


def _paths_seq(stmts: list[Stmt]) -> list[tuple[list[tuple[Expr, bool]], str | None]]:
    if not stmts:
        return [([], None)]
    head, rest = stmts[0], stmts[1:]
    out = []
    for (conds, state) in _residual_paths(head):
        if state is not None:
            out.append((conds, state))
        else:
            for (more, state2) in _paths_seq(rest):
                out.append((conds + more, state2))
    return out


def formula_for_state(res: ResidualFn, expected: str) -> PathFormula:
    """Disjunction over residual paths that return ``expected``."""
    paths = []
    for conds, state in _residual_paths(res.body):
        if state != expected:
            continue
        conjs: list[Conjunction] = [()]
        for guard, negate in conds:
            guard_dnf = _atom_dnf(guard, negate, res.params)
            conjs = [c + g for c in conjs for g in guard_dnf]
            if not conjs:
                break
        paths.extend(conjs)
    return PathFormula(paths)


def correct_one(fn: TransitionFn, tau: TraceElement, params: ParamMap,
                c: Correction) -> PathFormula:
    """Formula over deltas whose solutions make step t produce c.expected."""
    if c.expected not in fn.states:
        raise UnknownStateError(f'correction names undeclared state "{c.expected}"')
    if c.t != tau.t:
        raise SolverError(f"correction t={c.t} does not match trace element t={tau.t}")
    res = make_residual(fn, tau, params)
    return formula_for_state(res, c.expected)


def correct_all(fn: TransitionFn, params: ParamMap, trace: Trace,
                corrections: list[Correction], penalty: float = 1.0,
                epsilon: float = 1e-4,
                bounds: dict[str, tuple[float, float]] | None = None) -> RepairProblem:
    """One penalty-guarded clause per correction over a shared delta vector.

    The delta vector is bound once across all clauses, so every residual must
    agree on the repairable set: when any residual forces a parameter into
    the unrepairable set, all residuals are recomputed under the union.
    """
    if penalty <= 0:
        raise SolverError("penalty H must be positive")
    if epsilon <= 0:
        raise SolverError("epsilon must be positive")
    for c in corrections:
        if c.expected not in fn.states:
            raise UnknownStateError(f'correction names undeclared state "{c.expected}"')
        if not 0 <= c.t < len(trace):
            raise IndexError(f"correction t={c.t} outside trace of length {len(trace)}")
    forced: frozenset[str] = frozenset()
    while True:
        rep, unrep = classify_params(fn, forced)
        residuals = [make_residual(fn, trace[c.t], params, extra_unrep=forced)
                     for c in corrections]
        needed = frozenset().union(*(r.unrep_params for r in residuals)) if residuals else frozenset()
        if needed <= unrep:
            break
        forced = frozenset(needed)
    clauses = [formula_for_state(res, c.expected)
               for res, c in zip(residuals, corrections)]
    return RepairProblem(clauses, penalty, tuple(rep), epsilon, dict(bounds or {}))


def apply_deltas(params: ParamMap, deltas: DeltaMap,
                 repairable: tuple[str, ...] | list[str]) -> ParamMap:
    """Pointwise sum on repairable params; unrepairable entries copy through."""
    rep = set(repairable)
    for name in deltas:
        if name not in rep:
            raise KeyError(name)
    out = dict(params)
    for name, d in deltas.items():
        out[name] = out[name] + d
    return out


def run_repair(fn: TransitionFn, params: ParamMap, trace: Trace,
               corrections: list[Correction], penalty: float = 1.0,
               epsilon: float = 1e-4,
               bounds: dict[str, tuple[float, float]] | None = None,
               backend: str = "internal",
               solver_cmd: str | None = None) -> RepairResult:
    """Globally optimal repair of the parameter map under the given penalty.

    Satisfaction flags are produced by replaying the transition function
    under the repaired parameters at every corrected timestep, not taken
    from the solver.
    """
    from . import solver as solver_mod
    from . import smtlib

    problem = correct_all(fn, params, trace, corrections, penalty, epsilon, bounds)
    start = time.perf_counter()
    if backend == "internal":
        sol = solver_mod.solve_maxsmt(problem)
    elif backend == "smtlib":
        sol = smtlib.solve_via_subprocess(problem, solver_cmd)
    else:
        raise SolverError(f"unknown backend {backend!r}")
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    deltas = {p: sol.deltas.get(p, 0.0) for p in problem.rep_params}
    new_params = apply_deltas(params, deltas, problem.rep_params)
    satisfied = [step_transition(fn, trace[c.t], new_params) == c.expected
                 for c in corrections]
    stats = SolverStats(time_ms=elapsed_ms, subproblems=sol.subproblems,
                        lp_calls=sol.lp_calls)
    return RepairResult(new_params, deltas, satisfied, sol.objective, stats,
                        w=list(sol.w), rep_params=problem.rep_params)
