from pathlib import Path

import numpy as np
import pytest

from gti.graph import Graph, WeightedAdjacency, load_edge_list
from gti.metrics import (
    Distribution,
    best_modularity,
    clustering_distribution,
    degree_distribution,
    frobenius_distance,
    ks_distance,
    local_clustering,
    node_similarity,
    retained_percentages,
)
from gti.reconstruct import StageSet

DATA = Path(__file__).parent / "data"
FIXTURES10 = ["petersen10", "wheel10", "random10_dense", "random10_sparse"]


def random_graph(n, p, rng):
    return Graph(n, np.argwhere(np.triu(rng.random((n, n)) < p, 1)))


def star(n_leaves):
    return Graph(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


def complete(n):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def test_degree_distribution_examples():
    assert degree_distribution(star(4)).as_dict() == {1.0: 0.8, 4.0: 0.2}
    assert degree_distribution(complete(4)).as_dict() == {3.0: 1.0}


def test_clustering_examples():
    dist, mean = clustering_distribution(complete(3))
    assert dist.as_dict() == {1.0: 1.0} and mean == 1.0
    path = Graph(4, [(0, 1), (1, 2), (2, 3)])
    assert np.all(local_clustering(path) == 0)


@pytest.mark.parametrize("seed", range(5))
def test_clustering_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(15, 0.3, rng)
    a = g.dense()
    expected = []
    for v in range(15):
        nb = np.flatnonzero(a[v])
        d = len(nb)
        links = sum(a[x, y] for i, x in enumerate(nb) for y in nb[i + 1:])
        expected.append(0.0 if d < 2 else 2 * links / (d * (d - 1)))
    np.testing.assert_allclose(local_clustering(g), expected, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_distributions_sum_to_one_and_ignore_labels(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(30, 0.15, rng)
    perm = rng.permutation(30)
    h = Graph(30, perm[g.edges])
    for fn in (degree_distribution, lambda x: clustering_distribution(x)[0]):
        d = fn(g)
        assert abs(d.densities.sum() - 1) < 1e-9 and np.all(d.densities >= 0)
        e = fn(h)
        np.testing.assert_array_equal(d.values, e.values)
        np.testing.assert_allclose(d.densities, e.densities)


def test_ks_distance():
    a = Distribution(np.array([1.0, 2.0]), np.array([0.5, 0.5]))
    b = Distribution(np.array([1.0, 3.0]), np.array([0.5, 0.5]))
    assert ks_distance(a, a) == 0.0
    assert ks_distance(a, b) == pytest.approx(0.5)
    assert ks_distance(degree_distribution(star(4)), degree_distribution(complete(5))) == pytest.approx(0.8)


def test_frobenius_examples():
    rng = np.random.default_rng(0)
    g = random_graph(12, 0.3, rng)
    assert frobenius_distance(g, g) == 0.0
    u, v = g.edges[0]
    assert frobenius_distance(g, g.remove_edge(u, v)) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("seed", range(10))
def test_frobenius_brute_force(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = random_graph(20, 0.3, rng), random_graph(20, 0.3, rng)
    a, b = g1.dense(), g2.dense()
    brute = np.sqrt(sum((a[i, j] - b[i, j]) ** 2 for i in range(20) for j in range(20)))
    assert frobenius_distance(g1, g2) == pytest.approx(brute, rel=1e-12)
    w = rng.random((20, 20))
    w = (w + w.T) / 2
    brute = np.sqrt(sum((a[i, j] - w[i, j]) ** 2 for i in range(20) for j in range(20) if i != j))
    assert frobenius_distance(g1, WeightedAdjacency(w)) == pytest.approx(brute, rel=1e-12)


def test_frobenius_metric_axioms():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y, z = (random_graph(15, 0.3, rng) for _ in range(3))
        assert frobenius_distance(x, y) == frobenius_distance(y, x)
        assert frobenius_distance(x, z) <= frobenius_distance(x, y) + frobenius_distance(y, z) + 1e-12


def test_frobenius_size_mismatch():
    with pytest.raises(ValueError):
        frobenius_distance(Graph(3), Graph(4))


def test_similarity_complete_graph_uniform():
    r = node_similarity(complete(6), complete(6))
    np.testing.assert_allclose(r.S, 1 / 6)
    assert r.score == pytest.approx(1.0)
    assert r.converged and not r.degenerate


@pytest.mark.parametrize("name", FIXTURES10)
def test_similarity_normalized_and_bounded(name):
    g = load_edge_list(DATA / f"{name}.edges")
    rng = np.random.default_rng(0)
    for other in (g, random_graph(10, 0.5, rng), g.remove_edge(*g.edges[0])):
        for diagonal in (False, True):
            r = node_similarity(g, other, diagonal=diagonal)
            assert 0.0 <= r.score <= 1.0 + 1e-12
            assert np.all(r.S >= 0)
            if not r.degenerate:
                assert abs(np.linalg.norm(r.S) - 1) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_similarity_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = random_graph(10, 0.6, rng), random_graph(10, 0.6, rng)
    perm = rng.permutation(10)
    p1, p2 = Graph(10, perm[g1.edges]), Graph(10, perm[g2.edges])
    assert node_similarity(g1, g2).score == pytest.approx(node_similarity(p1, p2).score, abs=1e-9)


def test_similarity_degenerate_on_sparse_graphs():
    path = Graph(10, [(i, i + 1) for i in range(9)])
    r = node_similarity(path, path)
    assert r.degenerate and r.score == 0.0
    assert not node_similarity(path, path, penalty=0.0).degenerate


def test_similarity_deletion_not_monotone_in_general():
    # the summed score favours uniform S, so a deletion can raise it
    g = load_edge_list(DATA / "random10_dense.edges")
    base = node_similarity(g, g).score
    assert max(node_similarity(g.remove_edge(*e), g).score for e in g.edges) > base + 1e-6


def test_similarity_size_mismatch():
    with pytest.raises(ValueError):
        node_similarity(Graph(3), Graph(4))
    with pytest.raises(ValueError):
        node_similarity(Graph(3), Graph(3), penalty=-1)


def test_retained_percentages():
    stages = StageSet(np.array([0.9, 0.5, 0.2]), (Graph(5),) * 3, (2, 3, 4))
    assert retained_percentages(stages) == [50.0, 75.0, 100.0]
    assert retained_percentages(StageSet(np.array([1.0]), (Graph(2),), (7,))) == [100.0]
    with pytest.raises(ValueError):
        retained_percentages([])


def test_best_modularity_karate():
    g = load_edge_list(DATA / "karate.edges")
    assert 0.40 < best_modularity(g) < 0.43
    assert np.isnan(best_modularity(Graph(3)))
