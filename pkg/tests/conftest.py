import numpy as np
import pytest
from hypothesis import settings

from ednoise.graph import Graph, path_graph, star_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# (criterion, title, status, detail) rows filled in by test_acceptance.py
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} -- {detail}")


@pytest.fixture
def path3():
    return path_graph([0, 1, 0])


@pytest.fixture
def star4():
    return star_graph(4, labels=[0, 1, 1, 0, 1], num_classes=2)


@pytest.fixture
def two_cliques():
    """Two disjoint 4-cliques: nodes 0-3 labeled 0, nodes 4-7 labeled 1."""
    edges = [(i, j) for base in (0, 4) for i in range(base, base + 4) for j in range(i + 1, base + 4)]
    return Graph(8, edges, [0] * 4 + [1] * 4, 2)
