"""JSON wire formats: traces (JSON Lines), corrections, and parameter maps.

All parsers validate shape first (SchemaError) and then, given a
TransitionFn, coverage of the declared signatures (SignatureMismatchError).
"""

from __future__ import annotations

import json
import math

from .errors import SchemaError, SignatureMismatchError
from .syntax import (
    Correction, ParamMap, Trace, TraceElement, TransitionFn, Value,
    NUM, VEC2,
)


def _value_from_json(raw, where: str) -> Value:
    if isinstance(raw, bool):
        raise SchemaError(f"{where}: booleans are not trace values")
    if isinstance(raw, (int, float)):
        v = float(raw)
        if not math.isfinite(v):
            raise SchemaError(f"{where}: non-finite number")
        return v
    if isinstance(raw, list):
        if len(raw) != 2 or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in raw):
            raise SchemaError(f"{where}: vec2 must be a [num, num] pair")
        v = (float(raw[0]), float(raw[1]))
        if not all(math.isfinite(c) for c in v):
            raise SchemaError(f"{where}: non-finite vec2 component")
        return v
    raise SchemaError(f"{where}: expected num or [num, num], got {type(raw).__name__}")


def _value_to_json(v: Value):
    if isinstance(v, tuple):
        return [v[0], v[1]]
    return v


def _check_coverage(got: dict, sig: dict[str, str], section: str, where: str):
    missing = sorted(set(sig) - set(got))
    extra = sorted(set(got) - set(sig))
    if missing:
        raise SignatureMismatchError(f"{where}: missing {section} {', '.join(missing)}")
    if extra:
        raise SignatureMismatchError(f"{where}: unknown {section} {', '.join(extra)}")
    for name, ty in sig.items():
        actual = VEC2 if isinstance(got[name], tuple) else NUM
        if actual != ty:
            raise SignatureMismatchError(f"{where}: {section.rstrip('s')} {name} should be {ty}")


def parse_trace(source: str, fn: TransitionFn | None = None) -> Trace:
    """Parse a JSON Lines trace; validate against fn's signatures when given."""
    trace: Trace = []
    for lineno, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"trace line {lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{where}: {e}") from None
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("t", "state", "in", "var"):
            if key not in obj:
                raise SchemaError(f"{where}: missing key {key!r}")
        if not isinstance(obj["t"], int) or isinstance(obj["t"], bool) or obj["t"] < 0:
            raise SchemaError(f"{where}: t must be a nonnegative integer")
        if not isinstance(obj["state"], str):
            raise SchemaError(f"{where}: state must be a string")
        if not isinstance(obj["in"], dict) or not isinstance(obj["var"], dict):
            raise SchemaError(f"{where}: 'in' and 'var' must be objects")
        ins = {k: _value_from_json(v, f"{where}, in:{k}") for k, v in obj["in"].items()}
        vars_ = {k: _value_from_json(v, f"{where}, var:{k}") for k, v in obj["var"].items()}
        trace.append(TraceElement(obj["t"], ins, vars_, obj["state"]))
    for i, elem in enumerate(trace):
        if elem.t != i:
            raise SchemaError(f"trace timesteps must be consecutive from 0; element {i} has t={elem.t}")
    if fn is not None:
        validate_trace(trace, fn)
    return trace


def validate_trace(trace: Trace, fn: TransitionFn):
    states = set(fn.states)
    for elem in trace:
        where = f"trace element t={elem.t}"
        if elem.state not in states:
            raise SignatureMismatchError(f'{where}: undeclared state "{elem.state}"')
        _check_coverage(elem.ins, fn.input_sig, "inputs", where)
        _check_coverage(elem.vars, fn.var_sig, "vars", where)


def parse_corrections(source: str, fn: TransitionFn | None = None,
                      trace: Trace | None = None) -> list[Correction]:
    """Parse a corrections JSON array; validate states and timestep range."""
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as e:
        raise SchemaError(f"corrections: {e}") from None
    if not isinstance(raw, list):
        raise SchemaError("corrections: expected a JSON array")
    out = []
    for i, obj in enumerate(raw):
        where = f"correction {i}"
        if not isinstance(obj, dict) or set(obj) != {"t", "expected"}:
            raise SchemaError(f'{where}: expected {{"t": int, "expected": str}}')
        if not isinstance(obj["t"], int) or isinstance(obj["t"], bool) or obj["t"] < 0:
            raise SchemaError(f"{where}: t must be a nonnegative integer")
        if not isinstance(obj["expected"], str):
            raise SchemaError(f"{where}: expected must be a string")
        c = Correction(obj["t"], obj["expected"])
        if fn is not None and c.expected not in fn.states:
            raise SignatureMismatchError(f'{where}: undeclared state "{c.expected}"')
        if trace is not None and not 0 <= c.t < len(trace):
            raise SignatureMismatchError(f"{where}: t={c.t} outside trace of length {len(trace)}")
        out.append(c)
    return out


def parse_params(source: str, fn: TransitionFn | None = None) -> ParamMap:
    """Parse a parameter map; must cover fn's parameter signature exactly."""
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as e:
        raise SchemaError(f"params: {e}") from None
    if not isinstance(raw, dict):
        raise SchemaError("params: expected a JSON object")
    out: ParamMap = {}
    for name, v in raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise SchemaError(f"params: {name} must be a finite number")
        out[name] = float(v)
    if fn is not None:
        missing = sorted(set(fn.params) - set(out))
        extra = sorted(set(out) - set(fn.params))
        if missing:
            raise SignatureMismatchError(f"params: missing {', '.join(missing)}")
        if extra:
            raise SignatureMismatchError(f"params: unknown {', '.join(extra)}")
        # reorder to declaration order
        out = {name: out[name] for name in fn.params}
    return out


def trace_element_to_json(elem: TraceElement) -> str:
    obj = {
        "t": elem.t,
        "state": elem.state,
        "in": {k: _value_to_json(v) for k, v in elem.ins.items()},
        "var": {k: _value_to_json(v) for k, v in elem.vars.items()},
    }
    return json.dumps(obj)


def trace_to_jsonl(trace: Trace) -> str:
    return "\n".join(trace_element_to_json(e) for e in trace) + ("\n" if trace else "")


def params_to_json(params: ParamMap) -> str:
    return json.dumps(params, indent=2) + "\n"
