import json

import pytest

from ssakms.document import fixture_text, from_dict
from ssakms.spectral import compute_spectral
from ssakms.staralg import StarAlgebra


class Bundle:
    """A loaded document with its groupoid, spectral data and algebra."""

    def __init__(self, doc):
        self.doc = doc
        self.K = doc.graph
        self.A = doc.automaton
        self.G = doc.groupoid()
        self.spec = compute_spectral(self.K)
        self.alg = StarAlgebra(self.G)


def raw(name):
    return json.loads(fixture_text(name))


def flip_data(with_state=True):
    """One vertex, two edges per colour, e_i f_j ~ f_i e_j; the state swaps indices."""
    d = {
        "name": "flip",
        "k": 2,
        "vertices": ["v"],
        "edges": [{"id": f"e{i}", "r": "v", "s": "v", "colour": 1} for i in (1, 2)]
        + [{"id": f"f{i}", "r": "v", "s": "v", "colour": 2} for i in (1, 2)],
        "squares": [[f"e{i}", f"f{j}", f"f{i}", f"e{j}"] for i in (1, 2) for j in (1, 2)],
        "states": [],
        "trans": [],
    }
    if with_state:
        swap = {"e1": "e2", "e2": "e1", "f1": "f2", "f2": "f1"}
        d["states"] = [{"id": "a", "r": "v", "s": "v"}]
        d["trans"] = [{"state": "a", "edge": e, "out_edge": o, "out_state": "v"} for e, o in swap.items()]
    return d


@pytest.fixture(scope="session")
def sv():
    return Bundle(from_dict(raw("single-vertex")))


@pytest.fixture(scope="session")
def bas():
    return Bundle(from_dict(raw("basilica")))


@pytest.fixture(scope="session")
def flip():
    return Bundle(from_dict(flip_data()))


@pytest.fixture(scope="session", params=["single-vertex", "basilica"])
def example(request, sv, bas):
    return sv if request.param == "single-vertex" else bas


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, line
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(line(n))
