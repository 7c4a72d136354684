"""Undirected simple graphs on dense 0-based node ids, plus edge-list I/O."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


class EmptyGraphError(EdgeListError):
    pass


def _canonical_edges(n_nodes: int, edges) -> np.ndarray:
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if arr.min() < 0 or arr.max() >= n_nodes:
        raise ValueError(f"edge endpoint out of range for graph with {n_nodes} nodes")
    arr = np.sort(arr, axis=1)
    arr = arr[arr[:, 0] != arr[:, 1]]
    arr = np.unique(arr, axis=0)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    Edges are stored canonically as an ``(E, 2)`` array with ``u < v`` in
    ascending lexicographic order. Self-loops and duplicates passed to the
    constructor are silently dropped. ``labels`` optionally maps each dense id
    back to the identifier it had in the source file.
    """

    n_nodes: int
    edges: np.ndarray
    labels: tuple | None = field(default=None)

    def __init__(self, n_nodes: int, edges: Iterable = (), labels: Sequence | None = None):
        if n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        arr = _canonical_edges(int(n_nodes), edges)
        arr.setflags(write=False)
        object.__setattr__(self, "n_nodes", int(n_nodes))
        object.__setattr__(self, "edges", arr)
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != n_nodes:
                raise ValueError("labels must have one entry per node")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        """Build a graph from the nonzero upper triangle of a (dense or sparse) matrix."""
        if sp.issparse(adj):
            upper = sp.triu(adj, k=1).tocoo()
            mask = upper.data != 0
            pairs = np.column_stack([upper.row[mask], upper.col[mask]])
        else:
            adj = np.asarray(adj)
            r, c = np.nonzero(np.triu(adj, k=1))
            pairs = np.column_stack([r, c])
        return cls(adj.shape[0], pairs)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 CSR adjacency matrix."""
        n = self.n_nodes
        if self.n_edges == 0:
            return sp.csr_matrix((n, n), dtype=np.float64)
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.n_edges)
        mat = sp.csr_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(n, n))
        mat.sort_indices()
        return mat

    def dense(self, dtype=np.float64) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=dtype)
        if self.n_edges:
            u, v = self.edges[:, 0], self.edges[:, 1]
            a[u, v] = 1
            a[v, u] = 1
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.n_nodes)
        deg.setflags(write=False)
        return deg

    @cached_property
    def neighbors(self) -> tuple:
        """Per-node sorted neighbor arrays."""
        adj = self.adjacency
        return tuple(adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(self.n_nodes))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def remove_edge(self, u: int, v: int) -> "Graph":
        key = (min(u, v), max(u, v))
        keep = [e for e in self.edge_set if e != key]
        return Graph(self.n_nodes, keep, self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n_nodes, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


class WeightedAdjacency:
    """Dense symmetric non-negative weight matrix with zero diagonal.

    Negative entries are clamped to zero on construction.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.allclose(a, a.T, atol=1e-9, rtol=0):
            raise ValueError("weighted adjacency must be symmetric")
        a = 0.5 * (a + a.T)
        np.maximum(a, 0.0, out=a)
        np.fill_diagonal(a, 0.0)
        a.setflags(write=False)
        self.entries = a

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"WeightedAdjacency(n_nodes={self.n_nodes})"


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes``; slot ``i`` of the result is ``nodes[i]``.

    Returns the subgraph and the slot -> original node map.
    """
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= g.n_nodes):
        raise ValueError("node id out of range")
    if np.unique(nodes).size != nodes.size:
        raise ValueError("duplicate node in induced_subgraph node list")
    slot_of = np.full(g.n_nodes, -1, dtype=np.int64)
    slot_of[nodes] = np.arange(nodes.size)
    if g.n_edges and nodes.size:
        su = slot_of[g.edges[:, 0]]
        sv = slot_of[g.edges[:, 1]]
        keep = (su >= 0) & (sv >= 0)
        pairs = np.column_stack([su[keep], sv[keep]])
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
    return Graph(nodes.size, pairs), nodes.copy()


def load_edge_list(path, node_relabel: bool = True, n_nodes: int | None = None) -> Graph:
    """Read a SNAP-style whitespace separated edge list.

    Lines starting with ``#`` are comments. With ``node_relabel`` the ids are
    compacted to ``0..N-1`` in order of first appearance; otherwise the raw
    integer ids are used directly and ``N = max id + 1``. Edge lists cannot
    express trailing isolated nodes, so ``n_nodes`` may force a larger count.
    """
    path = os.fspath(path)
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tokens = text.split()
            if len(tokens) < 2:
                raise EdgeListError(f"{path}:{lineno}: expected two node ids, got {text!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: malformed node id in {text!r}") from None
            pairs.append((u, v))
    if not pairs:
        if n_nodes:
            return Graph(n_nodes, ())
        raise EmptyGraphError(f"{path}: no edges found")

    raw = np.asarray(pairs, dtype=np.int64)
    if node_relabel:
        flat = raw.ravel()
        uniq, first = np.unique(flat, return_index=True)
        order = np.argsort(first, kind="stable")
        labels = uniq[order]
        dense_id = np.empty(uniq.size, dtype=np.int64)
        dense_id[order] = np.arange(uniq.size)
        mapped = dense_id[np.searchsorted(uniq, flat)].reshape(-1, 2)
        n_nodes_found = uniq.size
        label_tuple = tuple(int(x) for x in labels)
    else:
        if raw.min() < 0:
            raise EdgeListError(f"{path}: negative node id without relabelling")
        mapped = raw
        n_nodes_found = int(raw.max()) + 1
        label_tuple = None

    if n_nodes is not None:
        if n_nodes < n_nodes_found:
            raise EdgeListError(f"{path}: file references {n_nodes_found} nodes, more than n_nodes={n_nodes}")
        if label_tuple is not None and n_nodes > n_nodes_found:
            label_tuple = None
        n_nodes_found = n_nodes
    n_loops = int(np.count_nonzero(mapped[:, 0] == mapped[:, 1]))
    if n_loops:
        logger.warning("%s: dropped %d self-loop(s)", path, n_loops)
    return Graph(n_nodes_found, mapped, label_tuple)


def write_edge_list(g: Graph, path) -> None:
    """Write one ``u v`` line per edge, ``u < v``, lexicographically ascending."""
    path = os.fspath(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{u} {v}\n" for u, v in g.edges.tolist())
    except OSError as exc:
        raise OSError(f"cannot write edge list to {path}: {exc}") from exc
