import itertools

import pytest

from eppakit.structure import Language, Structure, make_graph

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_graphs(n):
    """Every labelled loopless graph on vertices 1..n."""
    verts = list(range(1, n + 1))
    pairs = list(itertools.combinations(verts, 2))
    for mask in range(1 << len(pairs)):
        yield make_graph(verts, [p for i, p in enumerate(pairs) if mask >> i & 1])


@pytest.fixture
def K2():
    return make_graph([1, 2], [(1, 2)])


@pytest.fixture
def P3():
    return make_graph([1, 2, 3], [(1, 2), (2, 3)])


@pytest.fixture
def C4():
    return make_graph([0, 1, 2, 3], [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def unary_swap_language():
    return Language([("U", 1), ("V", 1)], group=[{"U": "V", "V": "U"}])


@pytest.fixture
def fun_language():
    return Language([("R", 2)], ["F"])


def structure(language, vertices, relations=None, functions=None):
    return Structure(language, vertices, relations or {}, functions or {})
