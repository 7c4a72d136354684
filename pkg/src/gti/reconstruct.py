"""Weighted recombination of regenerated layers and stage extraction.

The reconstruction is ``re = sum_l w_l * A_l + w_E * E + b`` where the bias
only applies on the support (entries where some layer or ``E`` is nonzero).
Entries sharing the same layer-membership pattern share a weight, which is
what makes a handful of cut values, and therefore stages, emerge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, WeightedAdjacency

EPSILON = 1e-6


class SumupDivergenceError(FloatingPointError):
    def __init__(self, message, params):
        super().__init__(message)
        self.params = params


def sumup_loss(re_G, G, epsilon: float = EPSILON, generalized: bool = False) -> float:
    """Sum over all N^2 entries of ``(G+eps) * log((G+eps) / (max(re,0)+eps))``.

    With ``generalized`` the I-divergence completion ``- (G+eps) + (re+eps)``
    is added per entry, which makes the loss non-negative and zero exactly at
    ``re == G``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    re = re_G.entries if isinstance(re_G, WeightedAdjacency) else np.asarray(re_G, dtype=np.float64)
    g = G.dense() if isinstance(G, Graph) else np.asarray(G, dtype=np.float64)
    if re.shape != g.shape:
        raise ValueError(f"shape mismatch: reconstruction {re.shape} vs graph {g.shape}")
    r = np.maximum(re, 0.0) + epsilon
    p = g + epsilon
    loss = p * np.log(p / r)
    if generalized:
        loss = loss - p + r
    return float(loss.sum())


def _pair_keys(edges: np.ndarray, n: int) -> np.ndarray:
    return edges[:, 0].astype(np.int64) * n + edges[:, 1]


@dataclass(frozen=True)
class _Design:
    """Upper-triangle support pairs grouped by (membership pattern, target)."""

    pairs: np.ndarray        # (P, 2) support pairs, u < v
    pattern: np.ndarray      # (P, L+1) 0/1 membership (layers..., E)
    target: np.ndarray       # (P,) original adjacency on the pair
    group_pattern: np.ndarray
    group_target: np.ndarray
    group_count: np.ndarray
    n_missing: int           # original edges outside the support


def _design(layers, inter: Graph, G: Graph) -> _Design:
    n = G.n_nodes
    comps = list(layers) + [inter]
    keys = [_pair_keys(c.edges, n) for c in comps]
    all_keys = np.unique(np.concatenate(keys)) if keys else np.zeros(0, np.int64)
    pattern = np.zeros((all_keys.size, len(comps)), dtype=np.int8)
    for j, kk in enumerate(keys):
        pattern[np.searchsorted(all_keys, kk), j] = 1
    g_keys = _pair_keys(G.edges, n)
    target = np.isin(all_keys, g_keys).astype(np.int8)
    n_missing = int(np.count_nonzero(~np.isin(g_keys, all_keys)))
    rows = np.column_stack([pattern, target])
    uniq, counts = np.unique(rows, axis=0, return_counts=True) if len(rows) else (
        np.zeros((0, len(comps) + 1), np.int8), np.zeros(0, np.int64))
    pairs = np.column_stack([all_keys // n, all_keys % n])
    return _Design(pairs, pattern, target, uniq[:, :-1].astype(np.float64),
                   uniq[:, -1].astype(np.float64), counts.astype(np.float64), n_missing)


def _objective(theta, d: _Design, epsilon):
    """Generalized divergence over all N^2 entries, divided by the support size.

    Returns ``(value, gradient)``. Pairs are symmetric, so each counts twice.
    """
    n_support = 2.0 * d.pairs.shape[0]
    r_raw = d.group_pattern @ theta[:-1] + theta[-1]
    r = np.maximum(r_raw, 0.0) + epsilon
    p = d.group_target + epsilon
    per = p * np.log(p / r) - p + r
    # original edges with no support keep re = 0
    p1 = 1.0 + epsilon
    missing = d.n_missing * (p1 * np.log(p1 / epsilon) - p1 + epsilon)
    value = (2.0 * np.sum(d.group_count * per) + 2.0 * missing) / n_support
    dr = np.where(r_raw > 0, 1.0 - p / r, 0.0) * d.group_count * 2.0 / n_support
    grad = np.empty_like(theta)
    grad[:-1] = d.group_pattern.T @ dr
    grad[-1] = dr.sum()
    return value, grad


@dataclass
class WeightedReconstruction:
    n_nodes: int
    layers: tuple
    inter: Graph
    layer_weights: np.ndarray
    inter_weight: float
    bias: float
    epsilon: float = EPSILON
    loss_curve: list = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.loss_curve[-1] if self.loss_curve else float("nan")

    @property
    def theta(self) -> np.ndarray:
        return np.r_[self.layer_weights, self.inter_weight, self.bias]

    def support_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Support pairs ``(u < v)`` and their raw weights."""
        n = self.n_nodes
        comps = list(self.layers) + [self.inter]
        coefs = list(self.layer_weights) + [self.inter_weight]
        keys = [_pair_keys(c.edges, n) for c in comps]
        all_keys = np.unique(np.concatenate(keys))
        w = np.zeros(all_keys.size)
        for c, kk in zip(coefs, keys):
            w[np.searchsorted(all_keys, kk)] += c
        w += self.bias
        return np.column_stack([all_keys // n, all_keys % n]), w

    @property
    def re_G(self) -> WeightedAdjacency:
        pairs, w = self.support_weights()
        a = np.zeros((self.n_nodes, self.n_nodes))
        a[pairs[:, 0], pairs[:, 1]] = w
        a[pairs[:, 1], pairs[:, 0]] = w
        return WeightedAdjacency(a)


def fit_sumup(layers, inter: Graph, G: Graph, iters: int = 500, lr: float = 0.1,
              epsilon: float = EPSILON, max_halvings: int = 30) -> WeightedReconstruction:
    """Fit layer weights, the inter-edge weight and the support bias.

    Full-batch gradient descent on the support-normalized generalized
    divergence, starting from ``w_l = 1/L``, ``w_E = 1``, ``b = 0``. Each
    iteration tries a step of ``lr`` and halves it while the loss would rise,
    so the recorded curve never increases.
    """
    layers = tuple(layers)
    if not layers:
        raise ValueError("need at least one layer")
    for c in layers + (inter,):
        if c.n_nodes != G.n_nodes:
            raise ValueError(f"component with {c.n_nodes} nodes does not match graph with {G.n_nodes}")
    d = _design(layers, inter, G)
    if d.pairs.shape[0] == 0:
        raise ValueError("empty support: no layer or inter edges")
    L = len(layers)
    theta = np.r_[np.full(L, 1.0 / L), 1.0, 0.0]
    value, grad = _objective(theta, d, epsilon)
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise SumupDivergenceError("sum-up loss is not finite at the initial weights", theta.copy())
    curve = [float(value)]
    for it in range(iters):
        # the zero clamp makes the loss non-smooth; halve the step when a full one overshoots
        step = lr
        for _ in range(max_halvings + 1):
            cand = theta - step * grad
            cand_value, cand_grad = _objective(cand, d, epsilon)
            if np.isfinite(cand_value) and cand_value <= value:
                break
            step *= 0.5
        if not (np.isfinite(cand_value) and np.all(np.isfinite(cand_grad))):
            raise SumupDivergenceError(f"sum-up loss diverged at iteration {it + 1}", theta.copy())
        if cand_value > value:
            cand, cand_value, cand_grad = theta, value, grad
        theta, value, grad = cand, cand_value, cand_grad
        curve.append(float(value))
    return WeightedReconstruction(G.n_nodes, layers, inter, theta[:L].copy(), float(theta[L]),
                                  float(theta[L + 1]), epsilon, curve)


def sumup_objective(rec: WeightedReconstruction, G: Graph) -> tuple[float, np.ndarray]:
    """The fitted objective and its gradient at ``rec``'s parameters."""
    d = _design(rec.layers, rec.inter, G)
    return _objective(rec.theta, d, rec.epsilon)


@dataclass(frozen=True)
class StageSet:
    cut_values: np.ndarray
    stages: tuple
    edge_counts: tuple

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def retained_pct(self) -> list:
        total = self.edge_counts[-1]
        return [100.0 * c / total for c in self.edge_counts]


def extract_stages(rec: WeightedReconstruction, round_decimals: int = 6, floor: float = 0.0) -> StageSet:
    """Stage ``i`` keeps every support edge whose rounded weight is at least the
    ``i``-th largest distinct rounded weight above ``floor``.

    With ``floor=0`` every positive weight opens a stage. The smoothed divergence
    never drives a zero-target pattern exactly to zero: its optimum sits at
    about ``epsilon * F / (c - F)``, so a floor of a few orders of ``epsilon``
    drops those residues without touching real structure."""
    if floor < 0:
        raise ValueError("floor must be non-negative")
    pairs, w = rec.support_weights()
    if pairs.shape[0] == 0:
        raise ValueError("reconstruction has empty support")
    w = np.round(w, round_decimals)
    cuts = np.unique(w[w > floor])[::-1]
    if cuts.size == 0:
        raise ValueError("reconstruction has no positive weights")
    stages, counts = [], []
    for cv in cuts:
        keep = pairs[w >= cv]
        stages.append(Graph(rec.n_nodes, keep))
        counts.append(int(keep.shape[0]))
    return StageSet(cuts, tuple(stages), tuple(counts))
