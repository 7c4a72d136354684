"""Per-layer adversarial training over subgraph adjacency tiles, and
regeneration of a layer from the trained generator."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .graph import Graph
from .partition import LayerPlan


class GanTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SubgraphBatch:
    """Canonical ``M x k x k`` binary tiles of one level, in slot order."""

    level: int
    k: int
    tiles: np.ndarray
    slots: tuple

    @property
    def M(self) -> int:
        return self.tiles.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.slots])


def subgraph_batch(g: Graph, plan: LayerPlan) -> SubgraphBatch:
    k = plan.k
    tiles = np.zeros((plan.M, k, k), dtype=np.uint8)
    slot_of = np.full(g.n_nodes, -1, dtype=np.int64)
    part_of = np.asarray(plan.assignment)
    for p, nodes in enumerate(plan.slots):
        slot_of[nodes] = np.arange(len(nodes))
    if g.n_edges:
        u, v = g.edges[:, 0], g.edges[:, 1]
        same = part_of[u] == part_of[v]
        p, a, b = part_of[u][same], slot_of[u][same], slot_of[v][same]
        tiles[p, a, b] = 1
        tiles[p, b, a] = 1
    return SubgraphBatch(plan.level, k, tiles, plan.slots)


def default_augment(M: int) -> int:
    return max(0, math.ceil(1000 / M) - 1)


def make_training_set(batch: SubgraphBatch, augment: int, seed=0) -> np.ndarray:
    """Canonical tiles plus ``augment`` random relabelings of each.

    A relabeling permutes rows and columns of the non-padding slots together,
    so every emitted tile stays symmetric with a zero diagonal.
    """
    if augment < 0:
        raise ValueError("augment must be non-negative")
    rng = np.random.default_rng(seed)
    out = np.zeros((batch.M * (augment + 1), batch.k, batch.k), dtype=np.uint8)
    row = 0
    for tile, size in zip(batch.tiles, batch.sizes):
        out[row] = tile
        row += 1
        for _ in range(augment):
            perm = np.arange(batch.k)
            perm[:size] = rng.permutation(size)
            out[row] = tile[np.ix_(perm, perm)]
            row += 1
    return out


@dataclass
class GanConfig:
    iters: int = 1000
    lr: float = 2e-4
    beta1: float = 0.5
    batch_size: int = 32
    z_dim: int = 100
    channels: tuple = (128, 64)
    seed: int = 0

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        if self.iters < 0 or self.batch_size < 1 or self.z_dim < 1 or len(self.channels) != 2:
            raise ValueError(f"invalid GAN config {self}")


def build_generator(k: int, z_dim: int, channels, rng) -> nn.Sequential:
    """noise -> FC -> (C1, k/4, k/4) -> deconv C2 -> deconv 1 -> sigmoid."""
    if k % 4:
        raise ValueError(f"tile size {k} must be a multiple of 4")
    c1, c2 = channels
    q = k // 4
    return nn.Sequential([
        nn.Linear(z_dim, c1 * q * q, rng=rng),
        nn.Reshape((c1, q, q)),
        nn.BatchNorm(c1),
        nn.LeakyReLU(),
        nn.ConvTranspose2d(c1, c2, rng=rng),
        nn.BatchNorm(c2),
        nn.LeakyReLU(),
        nn.ConvTranspose2d(c2, 1, rng=rng),
        nn.Sigmoid(),
    ])


def build_discriminator(k: int, channels, rng) -> nn.Sequential:
    """tile -> conv C2 -> conv C1 -> FC -> logit (the sigmoid lives in the loss)."""
    c1, c2 = channels
    q = k // 4
    return nn.Sequential([
        nn.Conv2d(1, c2, rng=rng),
        nn.LeakyReLU(),
        nn.Conv2d(c2, c1, rng=rng),
        nn.BatchNorm(c1),
        nn.LeakyReLU(),
        nn.Flatten(),
        nn.Linear(c1 * q * q, 1, rng=rng),
    ])


@dataclass
class GanModel:
    k: int
    config: GanConfig
    generator: nn.Sequential
    discriminator: nn.Sequential
    d_loss: list = field(default_factory=list)
    g_loss: list = field(default_factory=list)
    trained: bool = False

    @classmethod
    def init(cls, k: int, config: GanConfig) -> "GanModel":
        rng = np.random.default_rng(config.seed)
        gen = build_generator(k, config.z_dim, config.channels, rng)
        disc = build_discriminator(k, config.channels, rng)
        return cls(k, config, gen, disc)

    def noise(self, n, rng) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=(n, self.config.z_dim))

    def sample(self, n: int, rng) -> np.ndarray:
        """``n`` generator outputs of shape ``(k, k)`` with entries in (0, 1).

        Batch normalization uses minibatch statistics exactly as in training;
        running statistics are left untouched.
        """
        if not self.trained:
            raise nn.StateError("generator has not been trained")
        saved = {k: v.copy() for k, v in self.generator.named_buffers()}
        bs = self.config.batch_size
        out = []
        for start in range(0, n, bs):
            m = min(bs, n - start)
            out.append(self.generator.forward(self.noise(bs, rng), training=True)[:m, 0])
        self.generator.load_state_dict({**self.generator.state_dict(), **saved})
        return np.concatenate(out) if out else np.zeros((0, self.k, self.k))

    def save(self, path) -> None:
        arrays = {f"G.{k}": v for k, v in self.generator.state_dict().items()}
        arrays.update({f"D.{k}": v for k, v in self.discriminator.state_dict().items()})
        meta = {"k": self.k, "config": asdict(self.config), "trained": self.trained}
        nn.save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "GanModel":
        arrays, meta = nn.load_checkpoint(path)
        model = cls.init(int(meta["k"]), GanConfig(**meta["config"]))
        model.generator.load_state_dict({k[2:]: v for k, v in arrays.items() if k.startswith("G.")})
        model.discriminator.load_state_dict({k[2:]: v for k, v in arrays.items() if k.startswith("D.")})
        model.trained = bool(meta["trained"])
        return model


def _grads(net: nn.Sequential):
    return [layer.grads[name].copy() for layer, name in net.parameters()]


def train_layer_gan(tiles: np.ndarray, config: GanConfig | None = None) -> GanModel:
    """Alternate one discriminator and one generator Adam step per iteration.

    Minibatches of real tiles are drawn with replacement; noise is uniform on
    [-1, 1]. Raises :class:`GanTrainingError` on a non-finite loss.
    """
    config = config or GanConfig()
    tiles = np.asarray(tiles)
    if tiles.ndim != 3 or tiles.shape[0] < 1 or tiles.shape[1] != tiles.shape[2]:
        raise ValueError(f"expected a non-empty (S, k, k) tile stack, got {tiles.shape}")
    k = tiles.shape[1]
    model = GanModel.init(k, config)
    G, D = model.generator, model.discriminator
    opt_g = nn.Adam(G, lr=config.lr, beta1=config.beta1)
    opt_d = nn.Adam(D, lr=config.lr, beta1=config.beta1)
    rng = np.random.default_rng([config.seed, 1])
    data = tiles.astype(np.float64)[:, None]
    bs = config.batch_size
    ones, zeros = np.ones((bs, 1)), np.zeros((bs, 1))

    for it in range(config.iters):
        real = data[rng.integers(data.shape[0], size=bs)]
        fake = G.forward(model.noise(bs, rng))

        loss_real, grad = nn.bce_with_logits(D.forward(real), ones)
        D.backward(grad)
        acc = _grads(D)
        loss_fake, grad = nn.bce_with_logits(D.forward(fake), zeros)
        D.backward(grad)
        for (layer, name), g in zip(D.parameters(), acc):
            layer.grads[name] += g
        d_loss = loss_real + loss_fake

        fake = G.forward(model.noise(bs, rng))
        g_loss, grad = nn.bce_with_logits(D.forward(fake), ones)
        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise GanTrainingError(f"non-finite loss at iteration {it}: d_loss={d_loss}, g_loss={g_loss}")
        opt_d.step()
        G.backward(D.backward(grad))
        opt_g.step()
        model.d_loss.append(d_loss)
        model.g_loss.append(g_loss)

    model.trained = True
    return model


class ReplayModel:
    """Oracle "generator" that reproduces given tiles exactly, in order, cyclically."""

    def __init__(self, tiles):
        self.tiles = np.asarray(tiles, dtype=np.float64)
        self.k = self.tiles.shape[1]
        self.trained = True

    def sample(self, n, rng=None):
        idx = np.arange(n) % self.tiles.shape[0]
        return self.tiles[idx]


def binarize(x, threshold=0.5) -> np.ndarray:
    return (np.asarray(x) > threshold).astype(np.uint8)


def clean_tiles(samples, threshold=0.5) -> np.ndarray:
    """Binarize, symmetrize by element-wise max with the transpose, zero the diagonal."""
    t = binarize(samples, threshold)
    t = np.maximum(t, t.transpose(0, 2, 1))
    idx = np.arange(t.shape[1])
    t[:, idx, idx] = 0
    return t


def match_tiles(targets, sizes, pool) -> np.ndarray:
    """Greedy one-to-one assignment of pool tiles to targets by Hamming distance.

    Distances are measured on each target's non-padding block. Pairs are taken
    in ascending (distance, target, pool) order. Returns the pool index per target.
    """
    M, k = targets.shape[0], targets.shape[1]
    P = pool.shape[0]
    if P < M:
        raise ValueError(f"pool of {P} tiles cannot cover {M} subgraphs")
    dist = np.empty((M, P), dtype=np.int64)
    for size in np.unique(sizes):
        mask = np.zeros((k, k), dtype=np.int64)
        mask[:size, :size] = 1
        pm = (pool * mask).reshape(P, -1).astype(np.int64)
        rows = np.flatnonzero(sizes == size)
        tm = (targets[rows] * mask).reshape(rows.size, -1).astype(np.int64)
        dist[rows] = tm.sum(1)[:, None] + pm.sum(1)[None, :] - 2 * tm @ pm.T
    order = np.lexsort((np.tile(np.arange(P), M), np.repeat(np.arange(M), P), dist.ravel()))
    chosen = np.full(M, -1, dtype=np.int64)
    used = np.zeros(P, dtype=bool)
    left = M
    for flat in order:
        t, p = divmod(int(flat), P)
        if chosen[t] < 0 and not used[p]:
            chosen[t] = p
            used[p] = True
            left -= 1
            if not left:
                break
    return chosen


def regenerate_layer(model, batch: SubgraphBatch, n_nodes: int, pool_factor: int = 10,
                     seed=0) -> Graph:
    """Rebuild one layer's intra-subgraph edges from generator samples.

    Draws ``pool_factor * M`` samples, cleans them, and writes the tile matched
    to each subgraph back through its slot map. Edges between subgraphs are
    never produced.
    """
    if not getattr(model, "trained", False):
        raise nn.StateError("cannot regenerate from an untrained model")
    if model.k != batch.k:
        raise ValueError(f"model tile size {model.k} != plan tile size {batch.k}")
    rng = np.random.default_rng(seed)
    pool = clean_tiles(model.sample(pool_factor * batch.M, rng))
    sizes = batch.sizes
    chosen = match_tiles(batch.tiles, sizes, pool)
    edges = []
    for j, p in enumerate(chosen):
        size = sizes[j]
        tile = np.triu(pool[p][:size, :size], k=1)
        a, b = np.nonzero(tile)
        nodes = np.asarray(batch.slots[j])
        edges.append(np.column_stack([nodes[a], nodes[b]]))
    return Graph(n_nodes, np.concatenate(edges) if edges else ())


def loss_curve_rows(model: GanModel):
    return [(i, d, g) for i, (d, g) in enumerate(zip(model.d_loss, model.g_loss))]
