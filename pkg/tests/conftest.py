import os

import pytest
from hypothesis import settings

from alloyqg.graph import Edge, build_graph, full_view

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def path_graph(lengths=(1.0, 1.0), l_minus=0.5, l_plus=2.0):
    names = [chr(ord("a") + i) for i in range(len(lengths) + 1)]
    edges = [Edge(f"{names[i]}{names[i + 1]}", names[i], names[i + 1], L) for i, L in enumerate(lengths)]
    return build_graph(names, edges, l_minus, l_plus)


def star_graph(leaves=3, length=1.0):
    edges = [Edge(f"e{i}", "c", f"v{i}", length) for i in range(leaves)]
    return build_graph(["c"] + [f"v{i}" for i in range(leaves)], edges, 0.5, 2.0)


@pytest.fixture
def unit_edge():
    return full_view(path_graph((1.0,)))


@pytest.fixture
def path2():
    return full_view(path_graph((1.0, 1.0)))


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":")), s)):
            terminalreporter.write_line(line)
