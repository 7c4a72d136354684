"""Balanced k-way partitioning and per-level tile plans.

The partitioner grows ``M`` regions from spread-out seeds under exact size
caps and then improves the edge-cut with Kernighan-Lin style one-for-one
swaps, which keep the part sizes fixed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph
from .hierarchy import HierarchyDecomposition


@dataclass(frozen=True)
class LayerPlan:
    level: int
    M: int
    k: int
    slots: tuple  # per part: array of original node ids, degree-descending
    assignment: np.ndarray  # node -> part

    @property
    def pad_counts(self) -> tuple:
        return tuple(self.k - len(s) for s in self.slots)


@dataclass(frozen=True)
class InterEdgeSet:
    level: int
    edges: np.ndarray  # (E, 2) canonical original-graph edges crossing parts


def part_sizes(n: int, M: int) -> list[int]:
    base, extra = divmod(n, M)
    return [base + 1 if i < extra else base for i in range(M)]


def edge_cut(g: Graph, assignment) -> int:
    assignment = np.asarray(assignment)
    if g.n_edges == 0:
        return 0
    return int(np.count_nonzero(assignment[g.edges[:, 0]] != assignment[g.edges[:, 1]]))


def tile_size(n: int, M: int) -> int:
    """Smallest multiple of 4 (at least 4) that holds ``ceil(n / M)`` slots."""
    return max(4, 4 * math.ceil(math.ceil(n / M) / 4))


def _bfs_dist(g: Graph, source: int) -> np.ndarray:
    dist = shortest_path(g.adjacency, unweighted=True, indices=source)
    dist[np.isinf(dist)] = g.n_nodes + 1  # unreachable counts as farthest
    return dist


def _spread_seeds(g: Graph, M: int, rng: np.random.Generator) -> list[int]:
    seeds = [int(rng.integers(g.n_nodes))]
    dist = _bfs_dist(g, seeds[0])
    while len(seeds) < M:
        dist[seeds] = -1
        far = np.flatnonzero(dist == dist.max())
        nxt = int(far[rng.integers(far.size)])
        seeds.append(nxt)
        dist = np.minimum(dist, _bfs_dist(g, nxt))
    return seeds


def _grow_regions(g: Graph, seeds, sizes, rng) -> np.ndarray:
    n = g.n_nodes
    nbrs = g.neighbors
    part = np.full(n, -1, dtype=np.int64)
    count = [0] * len(seeds)
    # per part max-heap of (-links into part, node)
    links = [dict() for _ in seeds]
    heaps: list[list] = [[] for _ in seeds]

    def claim(p, u):
        part[u] = p
        count[p] += 1
        for v in nbrs[u]:
            if part[v] < 0:
                links[p][v] = links[p].get(v, 0) + 1
                heapq.heappush(heaps[p], (-links[p][v], int(v)))

    for p, s in enumerate(seeds):
        claim(p, s)
    unassigned = n - len(seeds)
    while unassigned:
        # the least filled part (relative to its cap) that still has room grows next
        open_parts = [p for p in range(len(seeds)) if count[p] < sizes[p]]
        p = min(open_parts, key=lambda q: (count[q] / sizes[q], q))
        u = -1
        heap = heaps[p]
        while heap:
            neg, v = heapq.heappop(heap)
            if part[v] < 0 and links[p].get(v) == -neg:
                u = v
                break
        if u < 0:
            # frontier exhausted (disconnected graph): take a random free node
            free = np.flatnonzero(part < 0)
            u = int(free[rng.integers(free.size)])
        claim(p, u)
        unassigned -= 1
    return part


def _kl_refine(g: Graph, part: np.ndarray, max_passes: int = 20) -> np.ndarray:
    """Greedy pairwise swaps between parts; each accepted swap strictly lowers the cut."""
    nbrs = g.neighbors
    edge_set = g.edge_set
    part = part.copy()
    conn = []
    for u in range(g.n_nodes):
        cnt: dict[int, int] = {}
        for v in nbrs[u]:
            p = int(part[v])
            cnt[p] = cnt.get(p, 0) + 1
        conn.append(cnt)
    members: dict[int, list] = {}
    for u in range(g.n_nodes):
        members.setdefault(int(part[u]), []).append(u)

    def move(x, src, dst):
        for y in nbrs[x]:
            c = conn[y]
            c[src] -= 1
            c[dst] = c.get(dst, 0) + 1

    for _ in range(max_passes):
        improved = False
        for u in range(g.n_nodes):
            a = int(part[u])
            cu = conn[u]
            if len(cu) <= (1 if a in cu else 0):
                continue
            internal_u = cu.get(a, 0)
            best = None
            for b in sorted(cu):
                to_b = cu[b]
                if b == a or to_b == 0:
                    continue
                d_u = to_b - internal_u
                for v in members[b]:
                    cv = conn[v]
                    gain = d_u + cv.get(a, 0) - cv.get(b, 0)
                    if gain <= 0:
                        continue
                    if (min(u, v), max(u, v)) in edge_set:
                        gain -= 2
                    if gain > 0 and (best is None or gain > best[0]):
                        best = (gain, v, b)
            if best is None:
                continue
            _, v, b = best
            part[u], part[v] = b, a
            move(u, a, b)
            move(v, b, a)
            members[a].remove(u)
            members[a].append(v)
            members[b].remove(v)
            members[b].append(u)
            improved = True
        if not improved:
            break
    return part


def balanced_partition(g: Graph, M: int, seed: int = 0, refine: bool = True) -> np.ndarray:
    """Split ``g`` into ``M`` disjoint parts whose sizes differ by at most one.

    Returns the node -> part array.
    """
    n = g.n_nodes
    if not 1 <= M <= n:
        raise ValueError(f"need 1 <= M <= n_nodes, got M={M}, n_nodes={n}")
    if M == 1:
        return np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    sizes = part_sizes(n, M)
    seeds = _spread_seeds(g, M, rng)
    part = _grow_regions(g, seeds, sizes, rng)
    if refine:
        part = _kl_refine(g, part)
    return part


def canonical_slots(g: Graph, nodes) -> np.ndarray:
    """Order ``nodes`` by within-part degree, descending, ties by node id."""
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    inside = np.zeros(g.n_nodes, dtype=bool)
    inside[nodes] = True
    adj = g.adjacency
    deg = np.asarray(adj[nodes][:, inside].sum(axis=1)).ravel()
    return nodes[np.lexsort((nodes, -deg))]


def inter_edges(g: Graph, assignment, level: int = -1) -> InterEdgeSet:
    assignment = np.asarray(assignment)
    mask = assignment[g.edges[:, 0]] != assignment[g.edges[:, 1]]
    return InterEdgeSet(level, g.edges[mask].copy())


def build_layer_plan(g: Graph, decomposition: HierarchyDecomposition, level: int,
                     seed: int = 0) -> tuple[LayerPlan, InterEdgeSet]:
    if not 0 <= level < decomposition.n_levels:
        raise ValueError(f"level {level} out of range for {decomposition.n_levels} levels")
    M = decomposition.counts[level]
    assignment = balanced_partition(g, M, seed=seed)
    k = tile_size(g.n_nodes, M)
    slots = tuple(canonical_slots(g, np.flatnonzero(assignment == p)) for p in range(M))
    assignment.setflags(write=False)
    plan = LayerPlan(level=level, M=M, k=k, slots=slots, assignment=assignment)
    return plan, inter_edges(g, assignment, level)
