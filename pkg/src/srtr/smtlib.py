"""SMT-LIB v2 emission and model parsing for external OMT solvers.

The default encoding mirrors the internal solver exactly: real deltas with
split absolute values, one real penalty per clause constrained to {0, H}
via an exclusive disjunction, strict inequalities relaxed by epsilon, and a
single summed minimization objective.  An ``assert-soft`` encoding is also
emitted on request for solvers that prefer it; note its objective is
lexicographic (violations first), not the summed tradeoff.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass

from .errors import SmtParseError, SolverError, UnsatError
from .repair import LinAtom, RepairProblem


def _lit(v: float) -> str:
    if v < 0:
        return f"(- {_lit(-v)})"
    s = repr(float(v))
    if "e" in s or "E" in s:
        # SMT-LIB reals do not take exponent notation
        s = f"{v:.20f}".rstrip("0")
        if s.endswith("."):
            s += "0"
    return s


def _term(atom: LinAtom, epsilon: float) -> str:
    from .solver import interior_margin

    parts = [f"(* {_lit(c)} d_{p})" for p, c in atom.coeffs]
    lhs = parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})" if parts else "0.0"
    mu = interior_margin(epsilon)
    if atom.relop == "<":
        return f"(<= (+ {lhs} {_lit(epsilon)}) {_lit(atom.rhs)})"
    if atom.relop == ">":
        return f"(>= {lhs} {_lit(atom.rhs + epsilon)})"
    if atom.relop == "<=":
        return f"(<= {lhs} {_lit(atom.rhs - mu)})"
    if atom.relop == ">=":
        return f"(>= {lhs} {_lit(atom.rhs + mu)})"
    return f"(= {lhs} {_lit(atom.rhs)})"


def _clause_formula(paths, epsilon: float) -> str:
    if not paths:
        return "false"
    disjuncts = []
    for conj in paths:
        if not conj:
            return "true"
        terms = [_term(a, epsilon) for a in conj]
        disjuncts.append(terms[0] if len(terms) == 1 else f"(and {' '.join(terms)})")
    return disjuncts[0] if len(disjuncts) == 1 else f"(or {' '.join(disjuncts)})"


def emit_smtlib(rp: RepairProblem, encoding: str = "xor") -> str:
    """Render the repair problem as an SMT-LIB v2 optimization script."""
    if encoding not in ("xor", "soft"):
        raise SolverError(f"unknown smtlib encoding {encoding!r}")
    out = ["(set-logic QF_LRA)"]
    for p in rp.rep_params:
        out.append(f"(declare-fun d_{p} () Real)")
        out.append(f"(declare-fun a_{p} () Real)")
        out.append(f"(assert (>= a_{p} d_{p}))")
        out.append(f"(assert (>= a_{p} (- d_{p})))")
    for p, (lo, hi) in rp.bounds.items():
        if hi is not None and hi != float("inf"):
            out.append(f"(assert (<= d_{p} {_lit(hi)}))")
        if lo is not None and lo != float("-inf"):
            out.append(f"(assert (>= d_{p} {_lit(lo)}))")

    abs_terms = [f"a_{p}" for p in rp.rep_params]
    if encoding == "xor":
        weights = []
        for i, clause in enumerate(rp.clauses, start=1):
            phi = _clause_formula(clause.paths, rp.epsilon)
            out.append(f"(declare-fun w_{i} () Real)")
            out.append(f"(assert (or (= w_{i} {_lit(rp.penalty)}) "
                       f"(and (= w_{i} 0.0) {phi})))")
            weights.append(f"w_{i}")
        objective = " ".join(weights + abs_terms) or "0.0"
        if weights or abs_terms:
            out.append(f"(minimize (+ {objective} 0.0))")
        else:
            out.append("(minimize 0.0)")
    else:
        for clause in rp.clauses:
            phi = _clause_formula(clause.paths, rp.epsilon)
            out.append(f"(assert-soft {phi} :weight {_lit(rp.penalty)} :id viol)")
        if abs_terms:
            out.append(f"(minimize (+ {' '.join(abs_terms)} 0.0))")
    out.append("(check-sat)")
    out.append("(get-objectives)")
    out.append("(get-model)")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# model parsing

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _sexprs(text: str):
    tokens = _TOKEN.findall(text)
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(read())
            if pos >= len(tokens):
                raise SmtParseError("unbalanced parenthesis in solver output")
            pos += 1
            return items
        if tok == ")":
            raise SmtParseError("unexpected ')' in solver output")
        return tok

    while pos < len(tokens):
        yield read()


def _numeric(node) -> float | None:
    if isinstance(node, str):
        try:
            return float(node)
        except ValueError:
            return None
    if isinstance(node, list) and node:
        if node[0] == "-" and len(node) == 2:
            v = _numeric(node[1])
            return None if v is None else -v
        if node[0] == "/" and len(node) == 3:
            a, b = _numeric(node[1]), _numeric(node[2])
            if a is None or b is None or b == 0:
                return None
            return a / b
    return None


def _collect_values(node, values: dict[str, float]):
    if not isinstance(node, list):
        return
    # (define-fun name () Real value)
    if len(node) >= 5 and node[0] == "define-fun" and isinstance(node[1], str):
        v = _numeric(node[4])
        if v is not None:
            values[node[1]] = v
        return
    # bare (name value) pairs
    if len(node) == 2 and isinstance(node[0], str):
        v = _numeric(node[1])
        if v is not None:
            values[node[0]] = v
            return
    for sub in node:
        _collect_values(sub, values)


def _last_numeric(node) -> float | None:
    v = _numeric(node)
    if v is not None:
        return v
    if isinstance(node, list):
        for sub in reversed(node):
            v = _last_numeric(sub)
            if v is not None:
                return v
    return None


@dataclass
class SmtModel:
    values: dict[str, float]
    objective: float | None


def parse_smt_model(text: str) -> SmtModel:
    """Tolerant parse of ``sat`` + objectives + model from solver stdout."""
    status = None
    values: dict[str, float] = {}
    objective = None
    for node in _sexprs(text):
        if node == "sat":
            status = "sat"
        elif node == "unsat":
            raise UnsatError("solver reported unsat")
        elif node == "unknown":
            raise SmtParseError("solver reported unknown")
        elif isinstance(node, list):
            if node and node[0] == "objectives":
                objective = _last_numeric(node)
            else:
                _collect_values(node, values)
    if status != "sat":
        raise SmtParseError("solver output did not contain 'sat'")
    return SmtModel(values, objective)


def solve_via_subprocess(rp: RepairProblem, solver_cmd: str | None):
    """Emit, run the external solver on the script, and parse the model back.

    The command receives the script path as its final argument and must
    write the model to stdout.
    """
    from .solver import MaxSmtSolution, _certify_solution

    if not solver_cmd:
        raise SolverError("smtlib backend requires --solver-cmd")
    script = emit_smtlib(rp)
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as f:
        f.write(script)
        path = f.name
    argv = shlex.split(solver_cmd) + [path]
    proc = subprocess.run(argv, capture_output=True, text=True, timeout=300)
    if proc.returncode not in (0, 1) and not proc.stdout.strip():
        raise SolverError(f"external solver failed: {proc.stderr.strip()[:200]}")
    model = parse_smt_model(proc.stdout)

    deltas = {p: model.values.get(f"d_{p}", 0.0) for p in rp.rep_params}
    w = [model.values.get(f"w_{i}", 0.0) for i in range(1, len(rp.clauses) + 1)]
    choices = []
    for i, clause in enumerate(rp.clauses):
        if w[i] > rp.penalty / 2:
            choices.append(-1)
            continue
        k = next((j for j, conj in enumerate(clause.paths)
                  if all(a.holds_certified(deltas) for a in conj)), None)
        if k is None:
            raise SolverError(f"model does not satisfy clause {i} though w=0")
        choices.append(k)
    _certify_solution(rp, tuple(choices), deltas)
    objective = model.objective
    if objective is None:
        objective = sum(w) + sum(abs(d) for d in deltas.values())
    return MaxSmtSolution(deltas, w, float(objective), subproblems=1, lp_calls=0)
