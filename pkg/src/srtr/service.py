"""Local HTTP service exposing a loaded trace, corrections, and repair to the
browser annotator.

Single-session, loopback by default, no auth: a desk tool for one operator.
Requests are handled sequentially (plain HTTPServer), which makes the
session single-writer by construction.  Repair never mutates the loaded
parameter map; the operator accepts a new map explicitly via POST
/api/params.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

from .errors import SrtrError
from .formats import parse_params
from .interp import step_transition
from .repair import RepairResult, run_repair
from .syntax import Correction, ParamMap, Trace, TransitionFn


@dataclass
class Session:
    fn: TransitionFn
    source: str
    params: ParamMap
    trace: Trace
    corrections: list[Correction] = field(default_factory=list)
    history: list[RepairResult] = field(default_factory=list)


def make_report(result: RepairResult) -> str:
    """Canonical repair report; shared by the CLI and the service so the two
    paths serialize identically."""
    obj = {
        "deltas": {k: result.deltas[k] for k in result.rep_params},
        "satisfied": result.satisfied,
        "objective": result.objective,
        "solver_ms": result.stats.time_ms,
        "params": result.params,
    }
    return json.dumps(obj, indent=2) + "\n"


def replay_states(fn: TransitionFn, trace: Trace, params: ParamMap) -> list[dict]:
    """Re-run the transition over recorded inputs/vars under given params,
    threading the evolved state; one entry per step plus the final state."""
    out = []
    state = trace[0].state if trace else fn.start
    for tau in trace:
        out.append({"t": tau.t, "state": state})
        shifted = type(tau)(tau.t, tau.ins, tau.vars, state)
        state = step_transition(fn, shifted, params)
    out.append({"t": len(trace), "state": state})
    return out


_CONTENT_TYPES = {
    ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
    ".map": "application/json", ".svg": "image/svg+xml", ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    session: Session = None  # set by make_server
    static_dir: Path | None = None

    # silence default stderr request logging
    def log_message(self, fmt, *args):
        pass

    def _send(self, code: int, body: bytes, content_type: str = "application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code: int, obj):
        self._send(code, (json.dumps(obj) + "\n").encode())

    def _error(self, code: int, kind: str, detail: str):
        self._json(code, {"error": kind, "detail": detail})

    def _read_body(self):
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw.decode() or "null")
        except json.JSONDecodeError:
            return ...  # sentinel: malformed

    # --- routing ---

    def do_GET(self):
        s = self.session
        path, _, query = self.path.partition("?")
        if path == "/api/rsm":
            return self._json(200, {"source": s.source, "states": list(s.fn.states),
                                    "start": s.fn.start, "end": s.fn.end})
        if path == "/api/trace":
            params = dict(p.split("=", 1) for p in query.split("&") if "=" in p)
            lo = int(params.get("from", 0))
            hi = int(params.get("to", len(s.trace)))  # exclusive upper bound
            if not (0 <= lo <= hi <= len(s.trace)):
                return self._error(404, "UnknownTimestep",
                                   f"range {lo}..{hi} outside trace of length {len(s.trace)}")
            elems = [self._elem_json(e) for e in s.trace[lo:hi]]
            return self._json(200, elems)
        if path == "/api/params":
            return self._json(200, s.params)
        if path == "/api/corrections":
            return self._json(200, [{"t": c.t, "expected": c.expected} for c in s.corrections])
        return self._static(path)

    @staticmethod
    def _elem_json(e):
        def conv(v):
            return [v[0], v[1]] if isinstance(v, tuple) else v
        return {"t": e.t, "state": e.state,
                "in": {k: conv(v) for k, v in e.ins.items()},
                "var": {k: conv(v) for k, v in e.vars.items()}}

    def do_POST(self):
        s = self.session
        body = self._read_body()
        if body is ...:
            return self._error(400, "SchemaError", "malformed JSON body")
        if self.path == "/api/corrections":
            if (not isinstance(body, dict) or set(body) != {"t", "expected"}
                    or not isinstance(body.get("t"), int) or isinstance(body.get("t"), bool)
                    or not isinstance(body.get("expected"), str)):
                return self._error(400, "SchemaError", 'expected {"t": int, "expected": str}')
            if body["expected"] not in s.fn.states:
                return self._error(400, "SchemaError", f'undeclared state "{body["expected"]}"')
            if not 0 <= body["t"] < len(s.trace):
                return self._error(409, "OutOfRange",
                                   f"t={body['t']} outside trace of length {len(s.trace)}")
            s.corrections.append(Correction(body["t"], body["expected"]))
            return self._json(200, {"count": len(s.corrections)})
        if self.path == "/api/repair":
            if not isinstance(body, dict):
                return self._error(400, "SchemaError", "expected an object")
            penalty = body.get("penalty", 1.0)
            epsilon = body.get("epsilon", 1e-4)
            if not isinstance(penalty, (int, float)) or not isinstance(epsilon, (int, float)):
                return self._error(400, "SchemaError", "penalty and epsilon must be numbers")
            try:
                result = run_repair(s.fn, s.params, s.trace, list(s.corrections),
                                    penalty=float(penalty), epsilon=float(epsilon))
            except SrtrError as e:
                return self._error(400, e.kind, str(e))
            s.history.append(result)
            return self._send(200, make_report(result).encode())
        if self.path == "/api/replay":
            if not isinstance(body, dict) or not isinstance(body.get("params"), dict):
                return self._error(400, "SchemaError", 'expected {"params": {...}}')
            try:
                params = parse_params(json.dumps(body["params"]), s.fn)
                states = replay_states(s.fn, s.trace, params)
            except SrtrError as e:
                return self._error(400, e.kind, str(e))
            return self._json(200, {"states": states})
        if self.path == "/api/params":
            if not isinstance(body, dict):
                return self._error(400, "SchemaError", "expected a parameter map")
            try:
                s.params = parse_params(json.dumps(body), s.fn)
            except SrtrError as e:
                return self._error(400, e.kind, str(e))
            return self._json(200, s.params)
        return self._error(404, "NotFound", self.path)

    def do_DELETE(self):
        m = re.fullmatch(r"/api/corrections/(\d+)", self.path)
        if not m:
            return self._error(404, "NotFound", self.path)
        i = int(m.group(1))
        if not 0 <= i < len(self.session.corrections):
            return self._error(404, "UnknownIndex", f"no correction {i}")
        del self.session.corrections[i]
        return self._json(200, {"count": len(self.session.corrections)})

    def _static(self, path: str):
        if self.static_dir is None:
            if path == "/":
                return self._send(200, _PLACEHOLDER.encode(), "text/html")
            return self._error(404, "NotFound", path)
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            return self._error(404, "NotFound", path)
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return self._send(200, target.read_bytes(), ctype)


_PLACEHOLDER = """<!doctype html>
<html><body><h1>srtr service</h1>
<p>No annotator build found. The JSON API is live under <code>/api/</code>.</p>
</body></html>
"""


def make_server(session: Session, host: str = "127.0.0.1", port: int = 8732,
                static_dir: str | Path | None = None) -> HTTPServer:
    handler = type("BoundHandler", (_Handler,), {
        "session": session,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return HTTPServer((host, port), handler)


def serve(session: Session, host: str = "127.0.0.1", port: int = 8732,
          static_dir: str | Path | None = None):
    """Run until interrupted."""
    server = make_server(session, host, port, static_dir)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
