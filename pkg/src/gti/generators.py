"""Synthetic graph models: Erdos-Renyi, Barabasi-Albert, Watts-Strogatz and
stochastic Kronecker graphs."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .graph import Graph

DEFAULT_INITIATOR = ((0.9, 0.5), (0.5, 0.1))


class Model(str, Enum):
    ER = "ER"
    BA = "BA"
    WS = "WS"
    KRONECKER = "Kronecker"


@dataclass(frozen=True)
class GeneratorSpec:
    model: Model
    n: int = 0
    p: float = 0.0
    m: int = 1
    k_ring: int = 2
    initiator: tuple = DEFAULT_INITIATOR
    power: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "initiator", tuple(tuple(float(x) for x in row) for row in self.initiator))
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability p={self.p} outside [0, 1]")
        model = self.model
        if model is Model.KRONECKER:
            init = np.asarray(self.initiator)
            if init.ndim != 2 or init.shape[0] != init.shape[1] or init.shape[0] < 2:
                raise ValueError("Kronecker initiator must be a square matrix of size >= 2")
            if np.any(init < 0) or np.any(init > 1):
                raise ValueError("Kronecker initiator entries must lie in [0, 1]")
            if self.power < 1:
                raise ValueError("Kronecker power must be >= 1")
            return
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if model is Model.BA and not 1 <= self.m < self.n:
            raise ValueError(f"BA requires 1 <= m < n, got m={self.m}, n={self.n}")
        if model is Model.WS:
            if self.k_ring % 2 or self.k_ring < 2 or self.k_ring >= self.n:
                raise ValueError(f"WS ring degree must be even and in [2, n), got {self.k_ring}")


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    rows = []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p) + u + 1
        if hits.size:
            rows.append(np.column_stack([np.full(hits.size, u), hits]))
    edges = np.concatenate(rows) if rows else np.zeros((0, 2), dtype=np.int64)
    return Graph(n, edges)


def barabasi_albert(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Preferential attachment grown from ``m`` unconnected seed nodes.

    The first added node links to every seed; each later node links to ``m``
    distinct existing nodes chosen proportionally to degree. The result has
    exactly ``m * (n - m)`` edges.
    """
    edges = []
    repeated: list[int] = []
    targets = list(range(m))
    for source in range(m, n):
        edges.extend((source, t) for t in targets)
        repeated.extend(targets)
        repeated.extend([source] * m)
        chosen: set[int] = set()
        pool = np.asarray(repeated)
        while len(chosen) < m:
            chosen.add(int(pool[rng.integers(pool.size)]))
        targets = sorted(chosen)
    return Graph(n, edges)


def watts_strogatz(n: int, k_ring: int, p: float, rng: np.random.Generator) -> Graph:
    half = k_ring // 2
    adj = [set() for _ in range(n)]
    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    # rewire in lattice order: distance-1 edges first, then distance-2, ...
    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= p or v not in adj[u]:
                continue
            if len(adj[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph(n, edges)


def kronecker(initiator, power: int, rng: np.random.Generator) -> Graph:
    """Stochastic Kronecker graph: each upper-triangular pair is an edge with
    the probability given by the ``power``-th Kronecker power of ``initiator``."""
    init = np.asarray(initiator, dtype=np.float64)
    probs = init
    for _ in range(power - 1):
        probs = np.kron(probs, init)
    n = probs.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(iu.size) < probs[iu, ju]
    return Graph(n, np.column_stack([iu[hit], ju[hit]]))


def generate(spec: GeneratorSpec) -> Graph:
    """Draw one graph from ``spec``; deterministic for a fixed ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    if spec.model is Model.ER:
        return erdos_renyi(spec.n, spec.p, rng)
    if spec.model is Model.BA:
        return barabasi_albert(spec.n, spec.m, rng)
    if spec.model is Model.WS:
        return watts_strogatz(spec.n, spec.k_ring, spec.p, rng)
    return kronecker(spec.initiator, spec.power, rng)


def ensemble(spec: GeneratorSpec, n_graphs: int = 100) -> list[Graph]:
    """Base-model ensemble: ``n_graphs`` draws with seeds ``spec.seed + i``."""
    return [generate(replace(spec, seed=spec.seed + i)) for i in range(n_graphs)]
