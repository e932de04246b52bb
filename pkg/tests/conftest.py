import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from srtr.formats import parse_corrections, parse_params, parse_trace
from srtr.parser import parse_rsm

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def attacker_fn():
    fn = parse_rsm((FIXTURES / "attacker.rsm").read_text())
    # the fixture must stay in sync with the packaged copy
    from srtr.sim import load_fn
    assert fn == load_fn("attacker")
    return fn


@pytest.fixture(scope="session")
def worked_params(attacker_fn):
    return parse_params((FIXTURES / "worked_params.json").read_text(), attacker_fn)


@pytest.fixture(scope="session")
def worked_trace(attacker_fn):
    return parse_trace((FIXTURES / "worked_trace.jsonl").read_text(), attacker_fn)


@pytest.fixture(scope="session")
def tau5(worked_trace):
    return worked_trace[5]


@pytest.fixture(scope="session")
def worked_corrections(attacker_fn, worked_trace):
    return parse_corrections((FIXTURES / "worked_corrections.json").read_text(),
                             attacker_fn, worked_trace)


@pytest.fixture(scope="session")
def c5(worked_corrections):
    return worked_corrections[0]


PI = math.pi
