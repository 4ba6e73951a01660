import pytest
from hypothesis import strategies as st

from rotorlab.graph import from_edge_list


@pytest.fixture
def path2():
    # active path 0-1 with the sink after 1
    return from_edge_list(2, [(0, 1)], [(1, 1)])


@pytest.fixture
def path3():
    return from_edge_list(3, [(0, 1), (1, 2)], [(2, 1)])


@pytest.fixture
def triangle():
    return from_edge_list(3, [(0, 1), (1, 2), (0, 2)], [(2, 1)])


@pytest.fixture
def cycle4():
    return from_edge_list(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [(0, 1)])


@st.composite
def small_graphs(draw, max_n=5):
    """Connected simple graphs with at least one sink edge."""
    n = draw(st.integers(1, max_n))
    edges = set()
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        edges.add((u, v))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=4)) if pairs else []
    edges.update(extra)
    sinks = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(1, 2)), min_size=1, max_size=3))
    return from_edge_list(n, sorted(edges), sinks)


@st.composite
def graph_and_rotors(draw, max_n=5):
    g = draw(small_graphs(max_n))
    rotor = [draw(st.integers(0, g.degree(v) - 1)) for v in range(g.n_active)]
    return g, rotor
