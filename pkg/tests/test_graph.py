import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrgraph.graph import EdgeListError, Graph, degree_histogram, read_edge_list, write_edge_list


def test_degree_histogram_small_cases():
    assert degree_histogram(Graph(3, np.empty((0, 2)))) == {0: 3}
    assert degree_histogram(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])) == {2: 3}
    assert degree_histogram(Graph.from_edges(3, [(0, 1), (1, 2)])) == {1: 2, 2: 1}


def test_graph_invariants_enforced():
    with pytest.raises(ValueError):
        Graph(3, [(1, 0)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 0)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 3)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 1), (0, 1)])


def test_from_edges_canonicalizes():
    g = Graph.from_edges(4, [(1, 0), (0, 1), (2, 2), (3, 1)])
    assert g.edges.tolist() == [[0, 1], [1, 3]]
    assert g.neighbors(1).tolist() == [0, 3]
    assert not g.edges.flags.writeable


def test_read_dedupes_orientations(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 0\n")
    g = read_edge_list(p)
    assert g.n == 2 and g.edges.tolist() == [[0, 1]]


def test_read_header_and_self_loop_warning(tmp_path, caplog):
    p = tmp_path / "g.txt"
    p.write_text("# n=4\n0 1\n2 2\n")
    with caplog.at_level(logging.WARNING):
        g = read_edge_list(p)
    assert g.n == 4 and g.edges.tolist() == [[0, 1]]
    assert "1 self-loop" in caplog.text


@pytest.mark.parametrize("text,lineno", [("0 1\nfoo bar\n", 2), ("7\n", 1), ("0 -1\n", 1), ("# n=2\n0 1\n0 5\n", 3)])
def test_read_malformed_reports_line(tmp_path, text, lineno):
    p = tmp_path / "g.txt"
    p.write_text(text)
    with pytest.raises(EdgeListError) as info:
        read_edge_list(p)
    assert info.value.lineno == lineno


def test_read_ignores_extra_columns(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1 0.5\n1 2 7 1999\n")
    assert read_edge_list(p).edges.tolist() == [[0, 1], [1, 2]]


def test_write_empty_graph_header_only(tmp_path):
    p = tmp_path / "g.txt"
    write_edge_list(Graph(5, np.empty((0, 2))), p)
    assert p.read_text() == "# n=5\n"


def test_round_trip_large(tmp_path):
    rng = np.random.default_rng(0)
    pairs = rng.integers(0, 3000, size=(12_000, 2))
    g = Graph.from_edges(3000, pairs)
    assert g.n_edges >= 10_000
    p = tmp_path / "g.txt"
    write_edge_list(g, p)
    h = read_edge_list(p)
    assert h == g
    assert set(map(tuple, h.edges.tolist())) == set(map(tuple, g.edges.tolist()))


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 25))
    if n < 2:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60))
    return Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_property_round_trip_and_handshake(tmp_path_factory, g):
    p = tmp_path_factory.mktemp("rt") / "g.txt"
    write_edge_list(g, p)
    assert read_edge_list(p) == g
    hist = degree_histogram(g)
    assert sum(hist.values()) == g.n
    assert sum(k * c for k, c in hist.items()) == 2 * g.n_edges
    assert g.n_edges <= g.n * (g.n - 1) // 2
