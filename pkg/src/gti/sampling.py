"""Classical graph-sampling baselines (random walk with restart, random jump,
forest fire) that stop at an exact node count, plus the comparison report
against a reconstruction stage."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .graph import Graph, induced_subgraph, write_edge_list
from .metrics import local_clustering


class Method(str, Enum):
    RANDOM_WALK = "RandomWalk"
    RANDOM_JUMP = "RandomJump"
    FOREST_FIRE = "ForestFire"


@dataclass(frozen=True)
class SamplerSpec:
    method: Method
    target_nodes: int
    restart_p: float = 0.15
    jump_p: float = 0.15
    burn_p: float = 0.35
    seed: int = 0
    start: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        for name in ("restart_p", "jump_p", "burn_p"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if self.target_nodes < 1:
            raise ValueError("target_nodes must be >= 1")


def _walk(g: Graph, spec: SamplerSpec, rng) -> list[int]:
    n = g.n_nodes
    nbrs = g.neighbors
    start = int(rng.integers(n)) if spec.start is None else spec.start
    jump = spec.method is Method.RANDOM_JUMP
    p = spec.jump_p if jump else spec.restart_p
    seen = {start}
    order = [start]
    cur = start
    stall = 0
    stall_limit = 100 * n
    while len(order) < spec.target_nodes:
        if rng.random() < p:
            cur = int(rng.integers(n)) if jump else start
        elif len(nbrs[cur]) == 0 or stall > stall_limit:
            # dead end or trapped in an exhausted component
            cur = int(rng.integers(n))
            if not jump:
                start = cur
            stall = 0
        else:
            cur = int(nbrs[cur][rng.integers(len(nbrs[cur]))])
        if cur not in seen:
            seen.add(cur)
            order.append(cur)
            stall = 0
        else:
            stall += 1
    return order


def _forest_fire(g: Graph, spec: SamplerSpec, rng) -> list[int]:
    n = g.n_nodes
    nbrs = g.neighbors
    burned = np.zeros(n, dtype=bool)
    order: list[int] = []

    def ignite(u):
        burned[u] = True
        order.append(u)

    seed = int(rng.integers(n)) if spec.start is None else spec.start
    ignite(seed)
    queue = [seed]
    while len(order) < spec.target_nodes:
        if not queue:
            free = np.flatnonzero(~burned)
            u = int(free[rng.integers(free.size)])
            ignite(u)
            queue.append(u)
            continue
        u = queue.pop(0)
        fresh = [int(v) for v in nbrs[u] if not burned[v]]
        if not fresh:
            continue
        if spec.burn_p >= 1.0:
            x = len(fresh)
        else:
            # geometric on {0, 1, ...} with mean burn_p / (1 - burn_p)
            x = int(rng.geometric(1.0 - spec.burn_p)) - 1
        if x == 0:
            continue
        picks = rng.permutation(len(fresh))[:x]
        for i in sorted(picks):
            if len(order) == spec.target_nodes:
                break
            ignite(fresh[i])
            queue.append(fresh[i])
    return order


def sample(g: Graph, spec: SamplerSpec) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on exactly ``spec.target_nodes`` sampled nodes.

    Returns the subgraph (slot ``i`` is the ``i``-th smallest sampled node)
    and the sorted array of sampled original node ids.
    """
    if spec.target_nodes > g.n_nodes:
        raise ValueError(f"target_nodes={spec.target_nodes} exceeds graph size {g.n_nodes}")
    if spec.start is not None and not 0 <= spec.start < g.n_nodes:
        raise ValueError(f"start node {spec.start} out of range")
    rng = np.random.default_rng(spec.seed)
    if spec.method is Method.FOREST_FIRE:
        order = _forest_fire(g, spec, rng)
    else:
        order = _walk(g, spec, rng)
    nodes = np.sort(np.asarray(order, dtype=np.int64))
    sub, _ = induced_subgraph(g, nodes)
    return sub, nodes


def top_degree_nodes(g: Graph, count: int) -> np.ndarray:
    """The ``count`` highest-degree nodes, ties broken by smaller id."""
    idx = np.lexsort((np.arange(g.n_nodes), -g.degrees))
    return idx[:count]


def stage_sample_nodes(stage: Graph, window=None) -> np.ndarray:
    """Non-isolated nodes of a stage, optionally limited to ``window = (lo, hi)`` inclusive."""
    nodes = np.flatnonzero(stage.degrees > 0)
    if window is not None:
        lo, hi = window
        nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    return nodes


@dataclass(frozen=True)
class SampleRow:
    method: str
    nodes: int
    edges: int
    hubs_retained: int
    mean_cc: float


def _row(method, g: Graph, sub: Graph, nodes, hubs) -> SampleRow:
    cc = local_clustering(sub)
    return SampleRow(method, int(nodes.size), sub.n_edges, int(np.isin(hubs, nodes).sum()),
                     float(cc.mean()) if cc.size else 0.0)


def comparison(g: Graph, stage=None, target_nodes: int | None = None, seed: int = 0,
               n_hubs: int = 10, window=None, **params) -> tuple[list[SampleRow], dict]:
    """Sample ``g`` with each baseline at the size of the stage sample.

    ``stage`` is a reconstruction stage on ``g``'s node set; its non-isolated
    nodes (inside ``window``) form the GTI row. Without a stage,
    ``target_nodes`` sets the size. Returns the report rows and the
    ``method -> (subgraph, nodes)`` samples.
    """
    hubs = top_degree_nodes(g, min(n_hubs, g.n_nodes))
    rows, samples = [], {}
    if stage is not None:
        nodes = stage_sample_nodes(stage, window)
        sub, _ = induced_subgraph(g, nodes)
        rows.append(_row("GTI", g, sub, nodes, hubs))
        samples["GTI"] = (sub, nodes)
        target_nodes = int(nodes.size)
    if not target_nodes:
        raise ValueError("need a stage with non-isolated nodes or a positive target_nodes")
    for method in Method:
        spec = SamplerSpec(method, target_nodes, seed=seed, **params)
        sub, nodes = sample(g, spec)
        rows.append(_row(method.value, g, sub, nodes, hubs))
        samples[method.value] = (sub, nodes)
    return rows, samples


def write_sampling_report(rows, samples, g: Graph, out_dir) -> Path:
    """Write ``sampling_report.csv`` and one ``sample_<method>.edges`` (original ids) per sample."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sampling_report.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "nodes", "edges", "hubs_retained", "mean_cc"])
        for r in rows:
            w.writerow([r.method, r.nodes, r.edges, r.hubs_retained, repr(r.mean_cc)])
    for method, (sub, nodes) in samples.items():
        write_edge_list(Graph(g.n_nodes, nodes[sub.edges] if sub.n_edges else ()),
                        out_dir / f"sample_{method}.edges")
    return path
