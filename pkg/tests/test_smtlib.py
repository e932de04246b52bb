import shutil
import sys
from pathlib import Path

import pytest

from srtr.errors import SmtParseError, UnsatError
from srtr.repair import RepairProblem, correct_all
from srtr.smtlib import emit_smtlib, parse_smt_model, solve_via_subprocess
from srtr.solver import solve_maxsmt


def worked_problem(attacker_fn, worked_trace, worked_params, c5):
    return correct_all(attacker_fn, worked_params, worked_trace, [c5], penalty=1.0)


def test_emit_declares_everything(attacker_fn, worked_trace, worked_params, c5):
    rp = worked_problem(attacker_fn, worked_trace, worked_params, c5)
    script = emit_smtlib(rp)
    assert script.startswith("(set-logic QF_LRA)")
    for p in ("aimMargin", "maxDist", "kickTimeout"):
        assert f"(declare-fun d_{p} () Real)" in script
        assert f"(assert (>= a_{p} d_{p}))" in script
    assert "(declare-fun w_1 () Real)" in script
    assert "(minimize" in script and "(check-sat)" in script
    assert "(get-objectives)" in script and "(get-model)" in script
    assert script.count("(") == script.count(")")


def test_emit_soft_encoding(attacker_fn, worked_trace, worked_params, c5):
    rp = worked_problem(attacker_fn, worked_trace, worked_params, c5)
    script = emit_smtlib(rp, encoding="soft")
    assert "assert-soft" in script and ":weight 1.0" in script


def test_emit_zero_corrections():
    rp = RepairProblem([], 1.0, ("p",), 1e-4)
    script = emit_smtlib(rp)
    assert "w_" not in script
    assert "(minimize (+ a_p 0.0))" in script


def test_parse_model_literal_forms():
    model = parse_smt_model("sat ((d2 (/ 1 2)))")
    assert model.values["d2"] == 0.5
    model = parse_smt_model("sat ((x (- 3.5)) (y 2))")
    assert model.values == {"x": -3.5, "y": 2.0}
    model = parse_smt_model("sat ((z (- (/ 7 4))))")
    assert model.values["z"] == -1.75


def test_parse_model_define_fun():
    out = """sat
(objectives ((+ w_1 a_p) 1.0))
(model
  (define-fun d_p () Real (/ 1 2000))
  (define-fun w_1 () Real 0.0)
)"""
    model = parse_smt_model(out)
    assert model.values["d_p"] == pytest.approx(5e-4)
    assert model.objective == 1.0


def test_parse_model_unsat():
    with pytest.raises(UnsatError):
        parse_smt_model("unsat")


def test_parse_model_garbage():
    with pytest.raises(SmtParseError):
        parse_smt_model("flubber")
    with pytest.raises(SmtParseError):
        parse_smt_model("sat ((x 1)")


def test_parse_objectives_line():
    model = parse_smt_model("sat (objectives (1.0))")
    assert model.objective == 1.0


def _write_stub_solver(tmp_path: Path, body: str) -> str:
    stub = tmp_path / "stub_solver.py"
    stub.write_text(body)
    return f"{sys.executable} {stub}"


def test_subprocess_backend_with_stub(tmp_path, attacker_fn, worked_trace, worked_params, c5):
    # a canned but formula-consistent model: maxDist += 0.5 satisfies the
    # worked example exactly as the running example promises
    rp = worked_problem(attacker_fn, worked_trace, worked_params, c5)
    cmd = _write_stub_solver(tmp_path, """
import sys
assert sys.argv[1].endswith(".smt2")
print("sat")
print("(objectives (0.5))")
print("(model (define-fun d_maxDist () Real (/ 1 2)) (define-fun w_1 () Real 0.0))")
""")
    sol = solve_via_subprocess(rp, cmd)
    assert sol.deltas["maxDist"] == 0.5
    assert sol.w == [0.0]
    assert sol.objective == pytest.approx(0.5)


def test_subprocess_backend_rejects_inconsistent_model(tmp_path, attacker_fn, worked_trace,
                                                       worked_params, c5):
    from srtr.errors import SolverError
    rp = worked_problem(attacker_fn, worked_trace, worked_params, c5)
    cmd = _write_stub_solver(tmp_path, """
import sys
print("sat")
print("(model (define-fun d_maxDist () Real (- 5.0)) (define-fun w_1 () Real 0.0))")
""")
    with pytest.raises(SolverError):
        solve_via_subprocess(rp, cmd)


@pytest.mark.skipif(shutil.which("z3") is None, reason="no external OMT solver on PATH")
def test_backend_agreement_with_real_solver(attacker_fn, worked_trace, worked_params, c5):
    rp = worked_problem(attacker_fn, worked_trace, worked_params, c5)
    internal = solve_maxsmt(rp)
    external = solve_via_subprocess(rp, "z3")
    assert external.objective == pytest.approx(internal.objective, abs=1e-6)
