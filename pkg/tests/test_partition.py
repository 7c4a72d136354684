import itertools

import numpy as np
import pytest

from gti.generators import barabasi_albert
from gti.graph import Graph
from gti.hierarchy import louvain_decompose
from gti.partition import (
    _grow_regions,
    _kl_refine,
    _spread_seeds,
    balanced_partition,
    build_layer_plan,
    canonical_slots,
    edge_cut,
    part_sizes,
    tile_size,
)


def random_graph(n, p, rng):
    return Graph(n, np.argwhere(np.triu(rng.random((n, n)) < p, 1)))


def two_cliques():
    c = list(itertools.combinations(range(5), 2))
    return Graph(10, c + [(u + 5, v + 5) for u, v in c] + [(4, 5)])


def test_twelve_nodes_three_parts():
    g = random_graph(12, 0.3, np.random.default_rng(0))
    part = balanced_partition(g, 3)
    assert sorted(np.bincount(part).tolist()) == [4, 4, 4]


def test_two_cliques_min_cut():
    g = two_cliques()
    # exhaustive oracle over balanced bipartitions
    best = min(edge_cut(g, [1 if i in s else 0 for i in range(10)])
               for s in itertools.combinations(range(10), 5))
    assert best == 1
    for seed in range(10):
        part = balanced_partition(g, 2, seed=seed)
        assert edge_cut(g, part) == 1
        assert len(set(part[:5])) == 1


def test_single_part_and_errors():
    g = random_graph(8, 0.4, np.random.default_rng(1))
    assert np.all(balanced_partition(g, 1) == 0)
    assert edge_cut(g, balanced_partition(g, 1)) == 0
    with pytest.raises(ValueError):
        balanced_partition(g, 9)
    with pytest.raises(ValueError):
        balanced_partition(g, 0)


@pytest.mark.parametrize("seed", range(20))
def test_balance_and_refinement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 80))
    g = random_graph(n, float(rng.uniform(0.03, 0.3)), rng)
    M = int(rng.integers(1, n + 1))
    part = balanced_partition(g, M, seed=seed)
    sizes = np.bincount(part, minlength=M)
    assert sizes.max() - sizes.min() <= 1 and sizes.sum() == n
    if M > 1:
        r = np.random.default_rng(seed)
        grown = _grow_regions(g, _spread_seeds(g, M, r), part_sizes(n, M), r)
        refined = _kl_refine(g, grown)
        assert edge_cut(g, refined) <= edge_cut(g, grown)
        assert np.array_equal(np.bincount(refined, minlength=M), np.bincount(grown, minlength=M))


def test_tile_size_rule():
    assert tile_size(500, 7) == 72
    assert part_sizes(500, 7).count(72) + part_sizes(500, 7).count(71) == 7
    assert tile_size(10, 3) == 4
    assert sorted(part_sizes(10, 3)) == [3, 3, 4]
    assert tile_size(10, 10) == 4
    assert tile_size(33, 2) == 20


def test_canonical_slots():
    g = Graph(6, [(1, 2), (1, 3), (2, 3), (3, 4), (0, 5)])
    assert canonical_slots(g, [4, 3, 2, 1]).tolist() == [3, 1, 2, 4]


@pytest.mark.parametrize("seed", range(100))
def test_edge_partition_property(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(int(rng.integers(8, 40)), 0.2, rng)
    if g.n_edges == 0:
        return
    dec = louvain_decompose(g, seed=seed)
    level = int(rng.integers(dec.n_levels))
    plan, inter = build_layer_plan(g, dec, level, seed=seed)
    intra = sum(1 for u, v in g.edges if plan.assignment[u] == plan.assignment[v])
    assert intra + inter.edges.shape[0] == g.n_edges
    assert all(plan.assignment[u] != plan.assignment[v] for u, v in inter.edges)


def test_layer_plan_invariants():
    g = barabasi_albert(200, 2, np.random.default_rng(0))
    dec = louvain_decompose(g, seed=0)
    for level in range(dec.n_levels):
        plan, inter = build_layer_plan(g, dec, level, seed=0)
        assert plan.M == dec.counts[level]
        assert plan.k % 4 == 0 and plan.k >= 4
        nodes = np.concatenate(plan.slots)
        assert np.array_equal(np.sort(nodes), np.arange(200))
        assert all(0 <= pad < plan.k for pad in plan.pad_counts)
        for slots in plan.slots:
            assert np.array_equal(slots, canonical_slots(g, slots))
    with pytest.raises(ValueError):
        build_layer_plan(g, dec, dec.n_levels)
