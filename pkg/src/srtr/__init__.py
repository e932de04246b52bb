"""srtr: repair robot state machine transition parameters from execution
traces and a handful of human corrections."""

__version__ = "0.1.0"

from .errors import SrtrError
from .formats import parse_corrections, parse_params, parse_trace
from .interp import RSM, check_trace_consistency, eval_expr, run_rsm, step_transition
from .parser import parse_rsm
from .peval import classify_params, make_residual, peval
from .repair import apply_deltas, correct_all, correct_one, run_repair
from .solver import solve_maxsmt
from .smtlib import emit_smtlib, parse_smt_model
from .syntax import Correction, ParamMap, TraceElement, TransitionFn, pretty_fn
from .typecheck import typecheck

__all__ = [
    "RSM", "Correction", "ParamMap", "SrtrError", "TraceElement", "TransitionFn",
    "apply_deltas", "check_trace_consistency", "classify_params", "correct_all",
    "correct_one", "emit_smtlib", "eval_expr", "make_residual", "parse_corrections",
    "parse_params", "parse_rsm", "parse_smt_model", "parse_trace", "peval",
    "pretty_fn", "run_repair", "run_rsm", "solve_maxsmt", "step_transition",
    "typecheck",
]
