import numpy as np
import pytest
from hypothesis import given, settings

from rotorlab.graph import build_lattice_box, from_edge_list
from rotorlab.rng import Rng
from rotorlab.srw import escape_probability, escape_probability_direct, green_function, mc_green

from conftest import small_graphs


def test_path2(path2):
    # from 0: always to 1; from 1 half to 0, half to the sink -> 2 visits each
    assert green_function(path2, 0) == pytest.approx([2.0, 2.0], abs=1e-12)
    assert escape_probability(path2, 0) == pytest.approx(0.5, abs=1e-12)
    assert escape_probability_direct(path2, 0) == pytest.approx(0.5, abs=1e-12)


def test_all_sink_slots():
    g = from_edge_list(2, [(0, 1)], [(0, 2), (1, 1)])
    # vertex 0 has degree 3, never returns once it leaves to the sink
    assert escape_probability(g, 0) == pytest.approx(escape_probability_direct(g, 0), abs=1e-12)
    lone = from_edge_list(1, [], [(0, 2)])
    assert escape_probability(lone, 0) == pytest.approx(1.0)
    assert green_function(lone, 0) == pytest.approx([1.0])


@given(small_graphs(6))
def test_harmonic_and_direct(g):
    a = 0
    G = green_function(g, a)
    deg = g.degrees
    for x in range(g.n_active):
        inflow = sum(G[y] / deg[y] for y in range(g.n_active) for t in g.slots(y) if t == x)
        assert G[x] == pytest.approx((x == a) + inflow, rel=1e-9, abs=1e-9)
    assert 1 / G[a] == pytest.approx(escape_probability_direct(g, a), rel=1e-9)


def test_lattice_symmetry():
    g = build_lattice_box(2, 4)
    G = green_function(g, g.resolve("origin"))
    assert G[g.resolve("1,0")] == pytest.approx(G[g.resolve("0,-1")], rel=1e-12)
    assert 0 < escape_probability(g, g.resolve("origin")) < 1


def test_iterative_path(monkeypatch):
    g = build_lattice_box(3, 4)
    o = g.resolve("origin")
    dense = green_function(g, o)
    monkeypatch.setenv("ROTORLAB_BUDGET", "dense=10")
    assert green_function(g, o) == pytest.approx(dense, rel=1e-9)


def test_mc_green(triangle):
    mean, se = mc_green(triangle, 0, 20_000, Rng(3))
    G = green_function(triangle, 0)
    assert np.all(np.abs(mean - G) <= 5 * se)
    again, _ = mc_green(triangle, 0, 20_000, Rng(3))
    assert np.array_equal(mean, again)


def test_mc_green_rejects_zero(triangle):
    with pytest.raises(ValueError):
        mc_green(triangle, 0, 0, Rng(1))
