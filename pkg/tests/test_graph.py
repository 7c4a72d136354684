import logging

import numpy as np
import pytest

from gti.graph import (
    EdgeListError,
    EmptyGraphError,
    Graph,
    WeightedAdjacency,
    induced_subgraph,
    load_edge_list,
    write_edge_list,
)


def random_graph(n, p, rng):
    return Graph(n, np.argwhere(np.triu(rng.random((n, n)) < p, 1)))


def test_constructor_canonicalizes():
    g = Graph(4, [(2, 1), (1, 2), (3, 3), (0, 3)])
    assert g.edges.tolist() == [[0, 3], [1, 2]]
    assert not g.edges.flags.writeable
    a = g.dense()
    assert np.array_equal(a, a.T) and np.all(np.diag(a) == 0)
    assert g.degrees.tolist() == [1, 1, 1, 1]


def test_constructor_rejects_out_of_range():
    with pytest.raises(ValueError):
        Graph(3, [(0, 3)])
    with pytest.raises(ValueError):
        Graph(-1)


def test_from_adjacency_roundtrip():
    rng = np.random.default_rng(0)
    g = random_graph(25, 0.2, rng)
    assert Graph.from_adjacency(g.dense()) == g
    assert Graph.from_adjacency(g.adjacency) == g


def test_remove_edge_and_equality():
    g = Graph(3, [(0, 1), (1, 2)])
    h = g.remove_edge(2, 1)
    assert h == Graph(3, [(0, 1)])
    assert g.has_edge(1, 0) and not h.has_edge(1, 2)
    assert hash(h) == hash(Graph(3, [(1, 0)]))


def test_load_example(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 0\n1 1\n# c\n1 2")
    g = load_edge_list(p)
    assert g.n_nodes == 3
    assert g.edge_set == {(0, 1), (1, 2)}


def test_load_warns_on_self_loops(tmp_path, caplog):
    p = tmp_path / "g.txt"
    p.write_text("0 0\n0 1\n2 2\n")
    with caplog.at_level(logging.WARNING, logger="gti.graph"):
        load_edge_list(p)
    assert "dropped 2 self-loop" in caplog.text


def test_load_relabels_by_first_appearance(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("10 5\n5 7\n")
    g = load_edge_list(p)
    assert g.labels == (10, 5, 7)
    assert g.edge_set == {(0, 1), (1, 2)}
    raw = load_edge_list(p, node_relabel=False)
    assert raw.n_nodes == 11 and raw.edge_set == {(5, 10), (5, 7)}


def test_load_parse_error_names_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("a b\n")
    with pytest.raises(EdgeListError, match=r"bad.txt:1"):
        load_edge_list(p)
    p.write_text("0 1\n2\n")
    with pytest.raises(EdgeListError, match=r":2:"):
        load_edge_list(p)


def test_load_empty(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("# nothing\n")
    with pytest.raises(EmptyGraphError):
        load_edge_list(p)
    assert load_edge_list(p, n_nodes=4) == Graph(4)


def test_load_forced_node_count(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n")
    g = load_edge_list(p, n_nodes=5)
    assert g.n_nodes == 5 and g.labels is None
    with pytest.raises(EdgeListError):
        load_edge_list(p, n_nodes=1)


def test_write_format(tmp_path):
    p = tmp_path / "out.edges"
    write_edge_list(Graph(2, [(1, 0)]), p)
    assert p.read_bytes() == b"0 1\n"
    write_edge_list(Graph(3), p)
    assert p.read_bytes() == b""


def test_write_error_names_path(tmp_path):
    target = tmp_path / "missing" / "out.edges"
    with pytest.raises(OSError, match="missing"):
        write_edge_list(Graph(2, [(0, 1)]), target)


@pytest.mark.parametrize("seed", range(10))
def test_write_load_roundtrip(tmp_path, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(50, 0.1, rng)
    p = tmp_path / "g.edges"
    write_edge_list(g, p)
    back = load_edge_list(p, node_relabel=False, n_nodes=50)
    assert back == g


def test_induced_examples():
    tri = Graph(3, [(0, 1), (1, 2), (0, 2)])
    sub, nodes = induced_subgraph(tri, [0, 2])
    assert sub == Graph(2, [(0, 1)]) and nodes.tolist() == [0, 2]
    assert induced_subgraph(tri, [])[0] == Graph(0)
    star = Graph(6, [(0, i) for i in range(1, 6)])
    assert induced_subgraph(star, [1, 2, 3])[0] == Graph(3)


def test_induced_slot_order_and_errors():
    g = Graph(4, [(0, 3), (1, 2)])
    sub, _ = induced_subgraph(g, [3, 1, 0])
    assert sub.edge_set == {(0, 2)}
    with pytest.raises(ValueError):
        induced_subgraph(g, [0, 0])
    with pytest.raises(ValueError):
        induced_subgraph(g, [4])


@pytest.mark.parametrize("seed", range(5))
def test_induced_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(30, 0.2, rng)
    nodes = rng.choice(30, size=12, replace=False)
    sub, _ = induced_subgraph(g, nodes)
    expected = {(i, j) for i in range(12) for j in range(i + 1, 12) if g.has_edge(nodes[i], nodes[j])}
    assert sub.edge_set == expected
    assert sub.n_edges <= min(g.n_edges, 12 * 11 // 2)


def test_weighted_adjacency():
    w = WeightedAdjacency([[5.0, -1.0], [-1.0, 2.0]])
    assert np.array_equal(w.entries, np.zeros((2, 2)))
    w = WeightedAdjacency([[0.0, 0.3], [0.3 + 1e-12, 0.0]])
    assert w.entries[0, 1] == w.entries[1, 0]
    with pytest.raises(ValueError):
        WeightedAdjacency([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        WeightedAdjacency(np.zeros((2, 3)))
