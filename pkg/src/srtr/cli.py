"""Command-line entry point wiring the whole toolkit together."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, sim
from .errors import EmptyScenarioSetError, SrtrError
from .formats import (parse_corrections, parse_params, parse_trace,
                      params_to_json, trace_to_jsonl)
from .parser import parse_rsm
from .peval import make_residual
from .repair import correct_all, run_repair
from .service import Session, make_report, serve
from .smtlib import emit_smtlib
from .syntax import pretty_stmt


def _load_fn(path: str):
    return parse_rsm(Path(path).read_text())


def _load_inputs(args, need_trace=True, need_corrections=False):
    fn = _load_fn(args.rsm)
    params = parse_params(Path(args.params).read_text(), fn)
    trace = parse_trace(Path(args.trace).read_text(), fn) if need_trace else None
    corrections = None
    if need_corrections:
        corrections = parse_corrections(Path(args.corrections).read_text(), fn, trace)
    return fn, params, trace, corrections


def cmd_check(args) -> int:
    _load_fn(args.file)
    print(f"{args.file}: OK")
    return 0


def cmd_run(args) -> int:
    fn = _load_fn(args.rsm)
    params = parse_params(Path(args.params).read_text(), fn)
    scenario = sim.Scenario.from_json(Path(args.scenario).read_text())
    rsm = sim.RSM(fn, params)
    outcome = sim.simulate(rsm, scenario, args.max_steps)
    if args.log:
        Path(args.log).write_text(trace_to_jsonl(outcome.trace))
    print(f"outcome: {outcome.reason} success={outcome.success} steps={len(outcome.trace)}")
    return 0


def cmd_residual(args) -> int:
    fn, params, trace, _ = _load_inputs(args)
    if not 0 <= args.t < len(trace):
        raise EmptyScenarioSetError(f"t={args.t} outside trace of length {len(trace)}")
    res = make_residual(fn, trace[args.t], params)
    print(f"// repairable: {', '.join(res.rep_params)}")
    if res.unrep_params:
        print(f"// unrepairable: {', '.join(sorted(res.unrep_params))}")
    print(pretty_stmt(res.body))
    return 0


def _parse_bounds(pairs: list[str]) -> dict[str, tuple[float, float]]:
    bounds = {}
    for spec in pairs or []:
        name, _, rng = spec.partition("=")
        lo, _, hi = rng.partition(",")
        if not name or not lo or not hi:
            raise EmptyScenarioSetError(f"malformed --bound {spec!r}; use name=lo,hi")
        bounds[name] = (float(lo), float(hi))
    return bounds


def cmd_repair(args) -> int:
    fn, params, trace, corrections = _load_inputs(args, need_corrections=True)
    result = run_repair(fn, params, trace, corrections,
                        penalty=args.penalty, epsilon=args.epsilon,
                        bounds=_parse_bounds(args.bound),
                        backend=args.backend, solver_cmd=args.solver_cmd)
    if args.out:
        Path(args.out).write_text(params_to_json(result.params))
    report = make_report(result)
    if args.report:
        Path(args.report).write_text(report)
    else:
        print(report, end="")
    return 0 if all(result.satisfied) else 2


def cmd_emit_smt(args) -> int:
    fn, params, trace, corrections = _load_inputs(args, need_corrections=True)
    problem = correct_all(fn, params, trace, corrections,
                          penalty=args.penalty, epsilon=args.epsilon,
                          bounds=_parse_bounds(args.bound))
    script = emit_smtlib(problem, encoding=args.encoding)
    if args.out:
        Path(args.out).write_text(script)
    else:
        print(script, end="")
    return 0


def cmd_eval(args) -> int:
    if args.n <= 0:
        raise EmptyScenarioSetError("scenario count must be positive")
    fn = sim.load_fn(args.kind)
    if args.params:
        params = parse_params(Path(args.params).read_text(), fn)
    elif args.detuned:
        params = sim.detuned_params(args.kind)
    else:
        params = sim.default_params(args.kind)
    rsm = sim.RSM(fn, params)
    if args.grid:
        scenarios = sim.heatmap_scenarios(args.kind)
    else:
        scenarios = sim.gen_scenarios(args.seed, args.n, args.kind)
    t0 = time.perf_counter()
    rate, outcomes = sim.success_rate(rsm, scenarios)
    elapsed = time.perf_counter() - t0
    print(f"success rate: {rate:.3f} over {len(scenarios)} scenarios ({elapsed:.1f}s)")
    if args.heatmap:
        lines = ["x,y,angle,success"]
        for sc, out in zip(scenarios, outcomes):
            x, y, ang = sim.heat_key(sc)
            lines.append(f"{x:.3f},{y:.3f},{ang:.3f},{int(out.success)}")
        Path(args.heatmap).write_text("\n".join(lines) + "\n")
    return 0


def cmd_serve(args) -> int:
    fn = _load_fn(args.rsm)
    source = Path(args.rsm).read_text()
    params = parse_params(Path(args.params).read_text(), fn)
    trace = parse_trace(Path(args.trace).read_text(), fn)
    corrections = []
    if args.corrections:
        corrections = parse_corrections(Path(args.corrections).read_text(), fn, trace)
    session = Session(fn, source, params, trace, corrections)
    static = args.static
    if static is None:
        default = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = default if default.is_dir() else None
    print(f"serving on http://{args.host}:{args.port}/ "
          f"({'static: ' + str(static) if static else 'API only'})")
    serve(session, args.host, args.port, static)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srtr",
                                description="Repair robot state machine transition "
                                            "parameters from traces and corrections.")
    p.add_argument("--version", action="version", version=f"srtr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="parse and typecheck an .rsm file")
    c.add_argument("file")
    c.set_defaults(fn=cmd_check)

    c = sub.add_parser("run", help="simulate an RSM in a scenario")
    c.add_argument("--rsm", required=True)
    c.add_argument("--params", required=True)
    c.add_argument("--scenario", required=True)
    c.add_argument("--log", help="write the trace as JSON Lines")
    c.add_argument("--max-steps", type=int, default=None)
    c.set_defaults(fn=cmd_run)

    c = sub.add_parser("residual", help="print the residual at one timestep")
    c.add_argument("--rsm", required=True)
    c.add_argument("--params", required=True)
    c.add_argument("--trace", required=True)
    c.add_argument("--t", type=int, required=True)
    c.set_defaults(fn=cmd_residual)

    c = sub.add_parser("repair", help="solve for adjusted parameters")
    c.add_argument("--rsm", required=True)
    c.add_argument("--params", required=True)
    c.add_argument("--trace", required=True)
    c.add_argument("--corrections", required=True)
    c.add_argument("--penalty", type=float, default=1.0)
    c.add_argument("--epsilon", type=float, default=1e-4)
    c.add_argument("--bound", action="append", metavar="name=lo,hi")
    c.add_argument("--backend", choices=("internal", "smtlib"), default="internal")
    c.add_argument("--solver-cmd", help="external OMT solver command (smtlib backend)")
    c.add_argument("--out", help="write the repaired parameter map")
    c.add_argument("--report", help="write the JSON report (default: stdout)")
    c.set_defaults(fn=cmd_repair)

    c = sub.add_parser("emit-smt", help="emit the repair problem as SMT-LIB v2")
    c.add_argument("--rsm", required=True)
    c.add_argument("--params", required=True)
    c.add_argument("--trace", required=True)
    c.add_argument("--corrections", required=True)
    c.add_argument("--penalty", type=float, default=1.0)
    c.add_argument("--epsilon", type=float, default=1e-4)
    c.add_argument("--bound", action="append", metavar="name=lo,hi")
    c.add_argument("--encoding", choices=("xor", "soft"), default="xor")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_emit_smt)

    c = sub.add_parser("eval", help="success rate over generated scenarios")
    c.add_argument("--kind", choices=sim.KINDS, default="attacker")
    c.add_argument("--n", type=int, default=150)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--params", help="parameter map JSON (default: packaged values)")
    c.add_argument("--detuned", action="store_true", help="use the packaged detuned map")
    c.add_argument("--grid", action="store_true", help="heat-map grid instead of random")
    c.add_argument("--heatmap", help="write per-scenario CSV (x, y, angle, success)")
    c.set_defaults(fn=cmd_eval)

    c = sub.add_parser("serve", help="HTTP service for the annotator UI")
    c.add_argument("--rsm", required=True)
    c.add_argument("--params", required=True)
    c.add_argument("--trace", required=True)
    c.add_argument("--corrections")
    c.add_argument("--host", default="127.0.0.1")
    c.add_argument("--port", type=int, default=8732)
    c.add_argument("--static", help="directory of built annotator assets")
    c.set_defaults(fn=cmd_serve)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SrtrError as e:
        print(f"error: {e.kind}: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: FileNotFound: {e}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, ValueError, IndexError, KeyError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
