"""Louvain hierarchical community detection and Newman modularity.

Every recorded level is expressed as an assignment over the ORIGINAL nodes,
composed through all aggregation rounds so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class HierarchyDecomposition:
    """Levels ordered finest to coarsest.

    ``levels[l][v]`` is the community of original node ``v`` at level ``l``;
    ids are dense ``0..counts[l]-1``. ``visit_orders`` records the node visit
    permutation used in each aggregation round, for reproducibility.
    """

    levels: tuple
    counts: tuple
    modularities: tuple
    visit_orders: tuple = ()

    @property
    def n_levels(self) -> int:
        return len(self.levels)


def modularity(g: Graph, assignment) -> float:
    """Newman modularity ``sum_c e_c/m - (d_c / 2m)^2``."""
    assignment = np.asarray(assignment)
    if assignment.shape != (g.n_nodes,):
        raise ValueError(f"assignment must cover all {g.n_nodes} nodes, got shape {assignment.shape}")
    m = g.n_edges
    if m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    _, comm = np.unique(assignment, return_inverse=True)
    n_comm = int(comm.max()) + 1
    cu, cv = comm[g.edges[:, 0]], comm[g.edges[:, 1]]
    intra = np.bincount(cu[cu == cv], minlength=n_comm)
    deg_tot = np.bincount(comm, weights=g.degrees, minlength=n_comm)
    return float(np.sum(intra / m) - np.sum((deg_tot / (2.0 * m)) ** 2))


def _local_moves(adj, loops, k, m2, order, min_mod_gain):
    """One Louvain local-move phase on a weighted graph.

    ``adj[i]`` maps neighbor -> weight (self-loops excluded), ``loops[i]`` is
    the self-loop weight, ``k`` the weighted degrees and ``m2`` is twice the
    total edge weight. Returns the node -> community array.
    """
    n = len(adj)
    comm = np.arange(n)
    tot = k.astype(np.float64).copy()
    m = m2 / 2.0

    def current_q():
        inner = np.zeros(n)
        for i in range(n):
            ci = comm[i]
            inner[ci] += 2.0 * loops[i]
            for j, w in adj[i].items():
                if comm[j] == ci:
                    inner[ci] += w
        return float(np.sum(inner) / m2 - np.sum((tot / m2) ** 2))

    q = current_q()
    while True:
        moved = False
        for i in order:
            ci = comm[i]
            ki = k[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                cj = comm[j]
                links[cj] = links.get(cj, 0.0) + w
            tot[ci] -= ki
            own_gain = links.get(ci, 0.0) / m - tot[ci] * ki / (2.0 * m * m)
            best_c, best_gain = ci, own_gain
            for c in sorted(links):
                gain = links[c] / m - tot[c] * ki / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_c, best_gain = c, gain
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                moved = True
        if not moved:
            break
        new_q = current_q()
        if new_q - q < min_mod_gain:
            q = new_q
            break
        q = new_q
    return comm


def _renumber(comm):
    # communities numbered by their smallest member index
    _, first = np.unique(comm, return_index=True)
    remap = np.empty(comm.max() + 1, dtype=np.int64)
    remap[comm[np.sort(first)]] = np.arange(first.size)
    return remap[comm]


def _aggregate(adj, loops, comm, n_comm):
    new_adj = [dict() for _ in range(n_comm)]
    new_loops = np.zeros(n_comm)
    for i, nbrs in enumerate(adj):
        ci = comm[i]
        new_loops[ci] += loops[i]
        for j, w in nbrs.items():
            cj = comm[j]
            if ci == cj:
                if i < j:
                    new_loops[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
    return new_adj, new_loops


def louvain_decompose(g: Graph, seed: int = 0, min_mod_gain: float = 1e-7) -> HierarchyDecomposition:
    """Run Louvain and record one level per aggregation round.

    Nodes are visited in a seeded random order; equal gains go to the lowest
    community id and a node only leaves its community on a strict gain.
    """
    if g.n_edges == 0:
        raise ValueError("Louvain needs at least one edge (modularity undefined)")
    rng = np.random.default_rng(seed)
    adj = [dict.fromkeys(nbrs.tolist(), 1.0) for nbrs in g.neighbors]
    loops = np.zeros(g.n_nodes)
    m2 = 2.0 * g.n_edges

    node_to_comm = np.arange(g.n_nodes)
    prev_q = modularity(g, node_to_comm)
    levels, counts, mods, orders = [], [], [], []
    while True:
        n = len(adj)
        k = np.array([sum(nb.values()) for nb in adj]) + 2.0 * loops
        order = rng.permutation(n)
        comm = _renumber(_local_moves(adj, loops, k, m2, order, min_mod_gain))
        n_comm = int(comm.max()) + 1
        if n_comm == n and levels:
            break
        composed = comm[node_to_comm]
        q = modularity(g, composed)
        if levels and q - prev_q < min_mod_gain:
            break
        levels.append(composed)
        counts.append(n_comm)
        mods.append(q)
        orders.append(order)
        node_to_comm, prev_q = composed, q
        if n_comm == n or n_comm == 1:
            break
        adj, loops = _aggregate(adj, loops, comm, n_comm)

    for arr in levels:
        arr.setflags(write=False)
    return HierarchyDecomposition(tuple(levels), tuple(counts), tuple(mods), tuple(orders))
