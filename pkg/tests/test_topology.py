import math

import pytest
from hypothesis import given, settings, strategies as st

from decopt.topology import (
    Topology,
    TopologyError,
    complete_graph,
    is_connected,
    path_graph,
    random_geometric,
    read_edge_list,
    ring_graph,
    write_edge_list,
)

# frozen output of random_geometric(100, 0.25, seed=7)
GEOMETRIC_100_EDGES = 723


def test_canonical_graphs():
    assert complete_graph(3).edges == {(0, 1), (0, 2), (1, 2)}
    r = ring_graph(4)
    assert len(r.edges) == 4 and list(r.degrees) == [2, 2, 2, 2]
    assert path_graph(2).edges == complete_graph(2).edges
    assert list(complete_graph(6).degrees) == [5] * 6


def test_edges_are_symmetric_and_canonical():
    t = Topology(3, [(1, 0), (2, 1)])
    assert t.edges == {(0, 1), (1, 2)}
    assert t.has_edge(1, 0) and t.has_edge(0, 1)
    assert t.neighbors(1) == (0, 2)
    assert (t.adjacency() == t.adjacency().T).all()


def test_self_loops_rejected():
    with pytest.raises(TopologyError):
        Topology(3, [(1, 1)])


def test_is_connected():
    assert is_connected(path_graph(3))
    assert not is_connected(Topology(2, []))


def test_geometric_full_radius_gives_single_edge():
    t = random_geometric(2, math.sqrt(2), seed=0)
    assert t.edges == {(0, 1)}


def test_geometric_failure_after_retry_budget():
    with pytest.raises(TopologyError):
        random_geometric(5, 0.001, seed=0)


def test_geometric_regression_value():
    t = random_geometric(100, 0.25, seed=7)
    assert is_connected(t)
    assert len(t.edges) == GEOMETRIC_100_EDGES


def test_geometric_bad_arguments():
    with pytest.raises(ValueError):
        random_geometric(1, 0.5, seed=0)
    with pytest.raises(ValueError):
        random_geometric(5, 1.5, seed=0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 30), radius=st.floats(0.3, 1.4), seed=st.integers(0, 2**31))
def test_geometric_properties(n, radius, seed):
    t = random_geometric(n, radius, seed)
    assert is_connected(t)
    assert all(i < r for i, r in t.edges)
    # edge iff distance <= radius, on the retained coordinates
    c = t.coords
    for i in range(n):
        for r in range(i + 1, n):
            assert t.has_edge(i, r) == (math.dist(c[i], c[r]) <= radius)
    assert random_geometric(n, radius, seed) == t


def test_edge_list_round_trip(tmp_path):
    t = random_geometric(20, 0.4, seed=2)
    path = tmp_path / "g.txt"
    write_edge_list(t, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "20" and len(lines) == 1 + len(t.edges)
    assert read_edge_list(path).edges == t.edges
