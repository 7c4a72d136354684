"""Topology comparison measures: degree and clustering-coefficient
distributions, Frobenius distance, iterative node-node similarity with a
mismatch penalty, retained-edge accounting and per-stage modularity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, WeightedAdjacency
from .hierarchy import louvain_decompose


@dataclass(frozen=True)
class Distribution:
    values: np.ndarray
    densities: np.ndarray

    def as_dict(self) -> dict:
        return {float(v): float(d) for v, d in zip(self.values, self.densities)}

    def cdf_at(self, xs) -> np.ndarray:
        cum = np.cumsum(self.densities)
        idx = np.searchsorted(self.values, xs, side="right") - 1
        return np.where(idx >= 0, cum[np.clip(idx, 0, None)], 0.0)


def _distribution(samples) -> Distribution:
    samples = np.asarray(samples)
    if samples.size == 0:
        return Distribution(np.zeros(0), np.zeros(0))
    values, counts = np.unique(samples, return_counts=True)
    return Distribution(values, counts / samples.size)


def degree_distribution(g: Graph) -> Distribution:
    return _distribution(g.degrees)


def local_clustering(g: Graph) -> np.ndarray:
    """c(v) = 2 T(v) / (d(v)(d(v) - 1)), zero when d(v) < 2."""
    a = g.adjacency
    tri = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    deg = g.degrees.astype(np.float64)
    denom = deg * (deg - 1)
    return np.divide(2.0 * tri, denom, out=np.zeros_like(deg), where=denom > 0)


def clustering_distribution(g: Graph, decimals: int = 2) -> tuple[Distribution, float]:
    """Density of local clustering coefficients rounded to ``decimals``, and their mean."""
    cc = local_clustering(g)
    mean = float(cc.mean()) if cc.size else 0.0
    return _distribution(np.round(cc, decimals)), mean


def ks_distance(d1: Distribution, d2: Distribution) -> float:
    """Largest absolute gap between the two cumulative distribution functions."""
    xs = np.union1d(d1.values, d2.values)
    if xs.size == 0:
        return 0.0
    return float(np.max(np.abs(d1.cdf_at(xs) - d2.cdf_at(xs))))


def _as_matrix(x):
    if isinstance(x, Graph):
        return x.adjacency
    if isinstance(x, WeightedAdjacency):
        return x.entries
    if sp.issparse(x):
        return x
    return np.asarray(x, dtype=np.float64)


def frobenius_distance(g1, g2) -> float:
    """sqrt(trace(A^T A)) for A the difference of the two adjacency matrices."""
    a, b = _as_matrix(g1), _as_matrix(g2)
    if a.shape != b.shape:
        raise ValueError(f"size mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if sp.issparse(diff):
        return float(np.sqrt(diff.multiply(diff).sum()))
    return float(np.sqrt(np.sum(np.asarray(diff) ** 2)))


@dataclass(frozen=True)
class SimilarityResult:
    S: np.ndarray
    score: float
    iterations: int
    converged: bool
    degenerate: bool = False


def node_similarity(g1: Graph, g2: Graph, penalty: float = 1.0, tol: float = 1e-6,
                    max_iter: int = 200, diagonal: bool = False) -> SimilarityResult:
    """Coupled node-node similarity between two graphs on the same node count.

    Each step maps S to the Frobenius-normalized, zero-clamped value of
    ``A1 S A2^T + A1^T S A2 - penalty * (C1 S A2^T + A1 S C2^T)``, where ``C``
    is the complement adjacency (no self-pairs). Iteration starts from a
    uniform S and stops once two-step iterates differ by less than ``tol``.

    The score is ``sum(S) / n``. With ``diagonal`` it is the matched-pair
    average ``trace(S) / sqrt(n)`` instead; both lie in [0, 1].

    If the clamp zeroes every entry, S is returned as all zeros with score 0
    and ``degenerate`` set. With ``penalty=1`` this happens on most sparse
    graphs, since the complement is much denser than the adjacency.
    """
    n = g1.n_nodes
    if g2.n_nodes != n:
        raise ValueError(f"node count mismatch: {n} vs {g2.n_nodes}")
    if penalty < 0:
        raise ValueError("penalty must be non-negative")
    if n == 0:
        return SimilarityResult(np.zeros((0, 0)), 0.0, 0, True)
    a1, a2 = g1.dense(), g2.dense()
    c1 = 1.0 - a1 - np.eye(n)
    c2 = 1.0 - a2 - np.eye(n)

    def step(S):
        nxt = a1 @ S @ a2.T + a1.T @ S @ a2 - penalty * (c1 @ S @ a2.T + a1 @ S @ c2.T)
        np.maximum(nxt, 0.0, out=nxt)
        norm = np.linalg.norm(nxt)
        return nxt / norm if norm > 0 else None

    S = np.full((n, n), 1.0 / n)
    converged = False
    it = 0
    while it + 2 <= max_iter:
        half = step(S)
        nxt = step(half) if half is not None else None
        it += 2
        if nxt is None:
            # the penalty outweighs every matched neighborhood
            return SimilarityResult(np.zeros((n, n)), 0.0, it, True, degenerate=True)
        delta = np.linalg.norm(nxt - S)
        S = nxt
        if delta < tol:
            converged = True
            break
    score = float(np.trace(S) / np.sqrt(n)) if diagonal else float(S.sum() / n)
    return SimilarityResult(S, score, it, converged)


def retained_percentages(stages) -> list:
    """Per-stage edge count over the final stage's, as percentages rounded to 2 decimals."""
    counts = stages.edge_counts if hasattr(stages, "edge_counts") else [s.n_edges for s in stages]
    if not len(counts):
        raise ValueError("no stages")
    total = counts[-1]
    return [round(100.0 * c / total, 2) for c in counts]


def best_modularity(g: Graph, seed: int = 0) -> float:
    """Modularity of the coarsest Louvain level; NaN for an edgeless graph."""
    if g.n_edges == 0:
        return float("nan")
    return float(louvain_decompose(g, seed=seed).modularities[-1])


def stage_modularities(stages, seed: int = 0) -> list:
    return [best_modularity(s, seed) for s in stages.stages]


def ensemble_stats(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    return {"min": float(v.min()), "mean": float(v.mean()), "max": float(v.max()), "std": float(v.std())}
