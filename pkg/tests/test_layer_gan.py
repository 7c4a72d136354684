import itertools

import numpy as np
import pytest

from gti import nn
from gti.generators import barabasi_albert
from gti.graph import Graph
from gti.hierarchy import louvain_decompose
from gti.layer_gan import (
    GanConfig,
    GanModel,
    ReplayModel,
    binarize,
    clean_tiles,
    default_augment,
    loss_curve_rows,
    make_training_set,
    match_tiles,
    regenerate_layer,
    subgraph_batch,
    train_layer_gan,
)
from gti.partition import build_layer_plan

TINY = dict(iters=3, batch_size=4, z_dim=8, channels=(8, 4))


@pytest.fixture(scope="module")
def ba_setup():
    g = barabasi_albert(150, 2, np.random.default_rng(0))
    dec = louvain_decompose(g, seed=0)
    plan, inter = build_layer_plan(g, dec, 0, seed=0)
    return g, plan, inter, subgraph_batch(g, plan)


def test_batch_tiles_valid(ba_setup):
    g, plan, inter, batch = ba_setup
    assert batch.tiles.shape == (plan.M, plan.k, plan.k)
    assert np.array_equal(batch.tiles, batch.tiles.transpose(0, 2, 1))
    assert np.all(np.diagonal(batch.tiles, axis1=1, axis2=2) == 0)
    for tile, size in zip(batch.tiles, batch.sizes):
        assert not tile[size:].any() and not tile[:, size:].any()
    assert batch.tiles.sum() // 2 + inter.edges.shape[0] == g.n_edges


def test_training_set_counts_and_degrees(ba_setup):
    batch = ba_setup[3]
    assert make_training_set(batch, 0).shape[0] == batch.M
    assert np.array_equal(make_training_set(batch, 0), batch.tiles)
    out = make_training_set(batch, 3, seed=1)
    assert out.shape[0] == 4 * batch.M
    assert np.array_equal(out, out.transpose(0, 2, 1))
    for j in range(batch.M):
        src = np.sort(batch.tiles[j].sum(1))
        for t in out[4 * j:4 * j + 4]:
            assert np.array_equal(np.sort(t.sum(1)), src)
    with pytest.raises(ValueError):
        make_training_set(batch, -1)


def test_default_augment():
    assert default_augment(5) == 199
    assert 5 * (default_augment(5) + 1) == 1000
    assert default_augment(2000) == 0


def test_binarize_and_clean():
    x = np.random.default_rng(0).random((3, 4, 4))
    assert np.array_equal(binarize(binarize(x)), binarize(x))
    t = clean_tiles(x)
    assert np.array_equal(t, t.transpose(0, 2, 1))
    assert np.all(np.diagonal(t, axis1=1, axis2=2) == 0)


@pytest.mark.parametrize("seed", range(5))
def test_match_tiles_brute_force(seed):
    rng = np.random.default_rng(seed)
    M, P, k = 3, 5, 4
    targets = rng.integers(0, 2, (M, k, k))
    pool = rng.integers(0, 2, (P, k, k))
    sizes = rng.integers(2, k + 1, M)
    chosen = match_tiles(targets, sizes, pool)
    assert len(set(chosen.tolist())) == M

    def dist(t, p):
        s = sizes[t]
        return int(np.sum(targets[t][:s, :s] != pool[p][:s, :s]))

    # greedy oracle by explicit sort over all (distance, target, pool) triples
    triples = sorted((dist(t, p), t, p) for t in range(M) for p in range(P))
    expect, used = {}, set()
    for _, t, p in triples:
        if t not in expect and p not in used:
            expect[t] = p
            used.add(p)
    assert chosen.tolist() == [expect[t] for t in range(M)]
    with pytest.raises(ValueError):
        match_tiles(targets, sizes, pool[:2])


def test_replay_regenerates_intra_edges(ba_setup):
    g, plan, inter, batch = ba_setup
    layer = regenerate_layer(ReplayModel(batch.tiles), batch, g.n_nodes, pool_factor=3, seed=5)
    intra = {tuple(e) for e in g.edges.tolist() if plan.assignment[e[0]] == plan.assignment[e[1]]}
    assert layer.edge_set == intra
    assert all(plan.assignment[u] == plan.assignment[v] for u, v in layer.edges)


def test_pool_size(ba_setup):
    g, plan, inter, batch = ba_setup
    calls = []

    class Counting(ReplayModel):
        def sample(self, n, rng=None):
            calls.append(n)
            return super().sample(n, rng)

    regenerate_layer(Counting(batch.tiles), batch, g.n_nodes, pool_factor=10)
    assert calls == [10 * batch.M]


def test_untrained_rejected(ba_setup):
    g, plan, inter, batch = ba_setup
    model = GanModel.init(batch.k, GanConfig(**TINY))
    with pytest.raises(nn.StateError):
        regenerate_layer(model, batch, g.n_nodes)
    with pytest.raises(nn.StateError):
        model.sample(2, np.random.default_rng(0))


def test_generator_shapes():
    for k in (4, 8, 16):
        model = GanModel.init(k, GanConfig(**TINY))
        out = model.generator.forward(model.noise(4, np.random.default_rng(0)))
        assert out.shape == (4, 1, k, k)
        assert np.all((out > 0) & (out < 1))
        assert model.discriminator.forward(out).shape == (4, 1)
    with pytest.raises(ValueError):
        GanModel.init(6, GanConfig(**TINY))


def test_training_deterministic_and_finite(ba_setup):
    tiles = make_training_set(ba_setup[3], 1)
    a = train_layer_gan(tiles, GanConfig(seed=3, **TINY))
    b = train_layer_gan(tiles, GanConfig(seed=3, **TINY))
    assert len(a.d_loss) == 3 and np.all(np.isfinite(a.d_loss + a.g_loss))
    sa, sb = a.generator.state_dict(), b.generator.state_dict()
    assert all(np.array_equal(sa[k], sb[k]) for k in sa)
    assert loss_curve_rows(a)[0][0] == 0


def test_checkpoint_roundtrip(tmp_path):
    tiles = np.zeros((2, 8, 8), dtype=np.uint8)
    model = train_layer_gan(tiles, GanConfig(**TINY))
    path = tmp_path / "level0.ckpt"
    model.save(path)
    back = GanModel.load(path)
    assert back.trained and back.k == 8
    z = np.random.default_rng(1)
    assert np.array_equal(model.sample(4, np.random.default_rng(1)), back.sample(4, z))


def test_sample_leaves_running_stats():
    model = train_layer_gan(np.zeros((1, 8, 8)), GanConfig(**TINY))
    before = {k: v.copy() for k, v in model.generator.named_buffers()}
    model.sample(10, np.random.default_rng(0))
    after = dict(model.generator.named_buffers())
    assert all(np.array_equal(before[k], after[k]) for k in before)


def test_bad_tiles_rejected():
    with pytest.raises(ValueError):
        train_layer_gan(np.zeros((0, 8, 8)), GanConfig(**TINY))
    with pytest.raises(ValueError):
        train_layer_gan(np.zeros((2, 8, 4)), GanConfig(**TINY))
    with pytest.raises(ValueError):
        GanConfig(iters=-1)


def test_ba_level0_losses_finite(ba_setup):
    batch = ba_setup[3]
    model = train_layer_gan(make_training_set(batch, default_augment(batch.M)),
                            GanConfig(iters=60, channels=(16, 8)))
    assert np.all(np.isfinite(model.d_loss)) and np.all(np.isfinite(model.g_loss))


def test_regenerated_layer_block_confined(ba_setup):
    g, plan, inter, batch = ba_setup
    model = train_layer_gan(batch.tiles, GanConfig(**TINY))
    layer = regenerate_layer(model, batch, g.n_nodes, pool_factor=2)
    a = layer.dense()
    assert np.array_equal(a, a.T) and not np.diag(a).any()
    for u, v in itertools.islice(layer.edges.tolist(), 200):
        assert plan.assignment[u] == plan.assignment[v]
