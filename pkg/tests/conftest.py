import sys

import numpy as np
import pytest

from lazyid.datasets import load_example
from lazyid.model import build_diagram


def diagram(variables, arcs=(), cpts=(), utilities=(), order=None):
    """Compact builder: variables as (name, kind, card) triples, binary by default.

    ``cpts`` entries are (heads, parents, values); ``utilities`` are
    (name, vars, values).
    """
    desc = {
        "variables": [
            {"name": n, "kind": k, "states": [f"s{i}" for i in range(c)]}
            for n, k, c in (v if len(v) == 3 else (*v, 2) for v in variables)
        ],
        "arcs": list(arcs),
        "cpts": [
            {"head": list(h), "parents": list(p), "values": np.asarray(v, dtype=float)}
            for h, p, v in cpts
        ],
        "utilities": [
            {"name": n, "variables": list(vs), "values": np.asarray(v, dtype=float)}
            for n, vs, v in utilities
        ],
        "order": order,
    }
    return build_diagram(desc)


@pytest.fixture
def ex61():
    return load_example("ex61")


@pytest.fixture
def ex52():
    return load_example("ex52")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
    for line in acceptance.INFO:
        terminalreporter.write_line(line)
