"""Directed sensor-network topology.

Adjacency convention: ``adjacency[i, j] == 1`` means node ``j`` transmits to
node ``i`` (``j`` is an in-neighbour of ``i``).  Edge lists use 1-based
``[from, to]`` pairs, as in scenario files.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import as_matrix

__all__ = [
    "DiGraph",
    "laplacian",
    "is_strongly_connected",
    "check_idd",
    "default_topology",
    "DEFAULT_EDGES",
]

# Directed ring 1->2->3->4->5->1 with chords 1->3 and 3->5.
DEFAULT_EDGES = ((1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (1, 3), (3, 5))


@dataclass(frozen=True, eq=False)
class DiGraph:
    adjacency: np.ndarray

    def __post_init__(self):
        S = np.array(self.adjacency, dtype=int)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got {S.shape}")
        if not np.isin(S, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(S)):
            raise ValueError("self-loops are not allowed")
        S.setflags(write=False)
        object.__setattr__(self, "adjacency", S)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence[int]]) -> "DiGraph":
        S = np.zeros((n_nodes, n_nodes), dtype=int)
        for edge in edges:
            if len(edge) != 2:
                raise ValueError(f"edge {edge!r} is not a [from, to] pair")
            src, dst = int(edge[0]), int(edge[1])
            if not (1 <= src <= n_nodes and 1 <= dst <= n_nodes):
                raise ValueError(f"edge {edge!r} references a node outside 1..{n_nodes}")
            if src == dst:
                raise ValueError(f"edge {edge!r} is a self-loop")
            S[dst - 1, src - 1] = 1
        return cls(S)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """1-based ``(from, to)`` pairs, sorted by receiver then sender."""
        rows, cols = np.nonzero(self.adjacency)
        return [(int(j) + 1, int(i) + 1) for i, j in zip(rows, cols)]

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def undirected(self) -> "DiGraph":
        """Same graph with every edge made bidirectional."""
        return DiGraph(((self.adjacency + self.adjacency.T) > 0).astype(int))

    def is_undirected(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def __eq__(self, other):
        if not isinstance(other, DiGraph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())

    def __repr__(self):
        return f"DiGraph(n_nodes={self.n_nodes}, edges={self.edges()})"


def default_topology() -> DiGraph:
    return DiGraph.from_edges(5, DEFAULT_EDGES)


def laplacian(g: DiGraph) -> np.ndarray:
    """``D - S`` with ``D`` the diagonal of in-degrees (integer-valued float array)."""
    S = g.adjacency
    return (np.diag(S.sum(axis=1)) - S).astype(float)


def _reaches_all(step: np.ndarray) -> bool:
    # Breadth-first search from node 0 over a boolean successor matrix.
    n = step.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(step[u] & ~seen):
                seen[v] = True
                nxt.append(int(v))
        frontier = nxt
    return bool(seen.all())


def is_strongly_connected(g: DiGraph) -> bool:
    """Forward and reverse reachability from node 1 must both cover every node."""
    S = g.adjacency.astype(bool)
    # S[i, j]: j -> i, so successors of u are the rows i with S[i, u].
    forward = S.T
    return _reaches_all(forward) and _reaches_all(S)


def _transitive_closure(pattern: np.ndarray) -> np.ndarray:
    # Warshall on a boolean matrix (reflexive pattern expected).
    R = pattern.copy()
    for k in range(R.shape[0]):
        R |= np.outer(R[:, k], R[k, :])
    return R


def check_idd(M) -> bool:
    """Irreducible diagonal dominance test.

    True iff ``M`` is irreducible, weakly row diagonally dominant, and strictly
    dominant in at least one row.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    absM = np.abs(M)
    pattern = (absM > 0) | np.eye(n, dtype=bool)
    if not _transitive_closure(pattern).all():
        return False
    diag = np.diag(absM)
    off = absM.sum(axis=1) - diag
    return bool(np.all(diag >= off) and np.any(diag > off))
