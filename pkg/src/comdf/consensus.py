"""Consensus-gain design and the measurement-fusion iteration.

Every sensor ``i`` keeps an estimate ``z_i`` of the whole stacked measurement
vector ``y`` (length ``r``).  One fusion round moves channel ``j`` of ``z_i``
towards the in-neighbours' copies and, when ``j`` is itself an in-neighbour,
towards ``y_j``:

    z_ij <- z_ij - mu_ij * ( sum_l a_il (z_ij - z_lj) + a_ij (z_ij - y_j) )

Stacked over sensors this is ``eps <- G eps`` for ``eps = z - 1 (x) y`` and
``G = I - Lambda (L (x) I_r + B)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DesignError
from .graph import DiGraph, is_strongly_connected, laplacian
from .linalg import as_matrix, spectral_norm, spectral_radius

__all__ = [
    "ConsensusDesign",
    "design_mu_distributed",
    "design_mu_unified",
    "mu_upper_bound",
    "build_design",
    "design_from_policy",
    "fuse_measurements",
    "min_fusion_steps",
    "stability_terms",
    "channel_matrix",
]


def _require_strong(g: DiGraph):
    if not is_strongly_connected(g):
        raise DesignError("communication graph is not strongly connected")


def mu_upper_bound(g: DiGraph) -> np.ndarray:
    """Entrywise ``1 / (l_ii + a_ij)``, the largest admissible distributed gain."""
    L = laplacian(g)
    return 1.0 / (np.diag(L)[:, None] + g.adjacency)


def design_mu_distributed(g: DiGraph, slack: float = 1.0, shift: float = 1.0) -> np.ndarray:
    """Per-sensor consensus gains from local information only.

    ``mu[i, j] = slack / (l_ii + a_ij + shift)``.  The defaults reproduce the
    strictly interior choice ``1 / (l_ii + a_ij + 1)``; ``shift=0`` with
    ``slack=1`` sits exactly on the admissible boundary.  Row ``i`` depends
    only on sensor ``i``'s in-degree and in-neighbour set.
    """
    if not 0.0 < slack <= 1.0:
        raise ValueError(f"slack must lie in (0, 1], got {slack}")
    if shift < 0.0:
        raise ValueError(f"shift must be nonnegative, got {shift}")
    if g.n_nodes < 2:
        raise DesignError("a consensus design needs at least two sensors")
    _require_strong(g)
    L = laplacian(g)
    return slack / (np.diag(L)[:, None] + g.adjacency + shift)


def channel_matrix(g: DiGraph, r_list: Sequence[int]) -> np.ndarray:
    """``L (x) I_r + B``, the matrix whose inverse spectral radius caps a uniform gain."""
    r_list = [int(v) for v in r_list]
    if len(r_list) != g.n_nodes:
        raise ValueError(f"expected {g.n_nodes} measurement sizes, got {len(r_list)}")
    r = sum(r_list)
    L = laplacian(g)
    B = np.diag(np.concatenate([np.repeat(g.adjacency[i].astype(float), r_list) for i in range(g.n_nodes)]))
    return np.kron(L, np.eye(r)) + B


def design_mu_unified(g: DiGraph, r_list: Sequence[int], margin: float = 0.99) -> float:
    """Uniform gain ``margin / rho(L (x) I_r + B)`` (needs the global topology)."""
    if g.n_nodes < 2:
        raise DesignError("a consensus design needs at least two sensors")
    _require_strong(g)
    rho = spectral_radius(channel_matrix(g, r_list))
    if rho == 0.0:
        raise DesignError("channel matrix has zero spectral radius")
    return margin / rho


@dataclass(frozen=True, eq=False)
class ConsensusDesign:
    """Assembled fusion matrices for one graph, measurement layout and gain table."""

    graph: DiGraph
    r_list: tuple
    mu: np.ndarray
    Lambda: np.ndarray
    B: np.ndarray
    G: np.ndarray
    rho_G: float
    norm_G: float
    # Per-sensor, per-channel row weights used by the block update.
    gain_rows: np.ndarray = field(repr=False)
    leader_rows: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.graph.n_nodes

    @property
    def r(self) -> int:
        return sum(self.r_list)

    def G_power(self, l: int) -> np.ndarray:
        return np.linalg.matrix_power(self.G, int(l))

    def block_row_sums(self) -> np.ndarray:
        """Row sums of ``G`` reshaped to ``(N, r)``: sensor ``i``, channel row."""
        return self.G.sum(axis=1).reshape(self.N, self.r)


def build_design(g: DiGraph, r_list: Sequence[int], mu) -> ConsensusDesign:
    """Assemble ``Lambda``, ``B`` and ``G = I - Lambda (L (x) I_r + B)``."""
    r_list = tuple(int(v) for v in r_list)
    N = g.n_nodes
    if len(r_list) != N or any(v < 1 for v in r_list):
        raise ValueError(f"r_list must hold {N} positive sizes, got {r_list}")
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 0:
        mu = np.full((N, N), float(mu))
    if mu.shape != (N, N):
        raise ValueError(f"mu table must be {N}x{N}, got {mu.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0.0):
        raise ValueError("consensus gains must be positive and finite")
    r = sum(r_list)
    gain_rows = np.stack([np.repeat(mu[i], r_list) for i in range(N)])
    leader_rows = np.stack([np.repeat(g.adjacency[i].astype(float), r_list) for i in range(N)])
    Lambda = np.diag(gain_rows.ravel())
    B = np.diag(leader_rows.ravel())
    G = np.eye(N * r) - Lambda @ (np.kron(laplacian(g), np.eye(r)) + B)
    mu = mu.copy()
    for arr in (mu, Lambda, B, G, gain_rows, leader_rows):
        arr.setflags(write=False)
    return ConsensusDesign(
        graph=g,
        r_list=r_list,
        mu=mu,
        Lambda=Lambda,
        B=B,
        G=G,
        rho_G=spectral_radius(G),
        norm_G=spectral_norm(G),
        gain_rows=gain_rows,
        leader_rows=leader_rows,
    )


def design_from_policy(g: DiGraph, r_list, policy="distributed", slack=1.0, shift=1.0, mu_table=None):
    if policy == "distributed":
        mu = design_mu_distributed(g, slack=slack, shift=shift)
    elif policy == "unified":
        mu = design_mu_unified(g, r_list)
    elif policy == "explicit":
        if mu_table is None:
            raise ValueError("explicit policy needs a mu table")
        mu = np.asarray(mu_table, dtype=float)
    else:
        raise ValueError(f"unknown consensus policy {policy!r}")
    return build_design(g, r_list, mu)


def fuse_measurements(design: ConsensusDesign, z0, y, steps: int, anchor_own=False) -> np.ndarray:
    """Run ``steps`` synchronous fusion rounds.

    ``z0`` is the stacked ``(N*r,)`` vector of per-sensor measurement
    estimates, ``y`` the stacked ``(r,)`` true measurement.  Leading batch
    axes are allowed on both (they must broadcast).  Each round reads only
    the previous round's blocks, so sensors could run it in parallel.

    ``anchor_own`` pins sensor ``i``'s own channel to ``y_i`` after every
    round.  This is an optional extension and is off by default.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    N, r = design.N, design.r
    z = np.array(z0, dtype=float)
    y = np.asarray(y, dtype=float)
    if z.shape[-1] != N * r or y.shape[-1] != r:
        raise ValueError(f"expected z of length {N * r} and y of length {r}")
    z = z.reshape(z.shape[:-1] + (N, r))
    y = y[..., None, :]
    S = design.graph.adjacency.astype(float)
    deg = S.sum(axis=1)[:, None]
    own = _own_channel_mask(design) if anchor_own else None
    for _ in range(steps):
        # Disagreement with in-neighbours' copies plus the leader pull to y.
        neighbour_sum = np.einsum("ij,...jc->...ic", S, z)
        correction = deg * z - neighbour_sum + design.leader_rows * (z - y)
        z = z - design.gain_rows * correction
        if own is not None:
            z = np.where(own, y, z)
    return z.reshape(z.shape[:-2] + (N * r,))


def _own_channel_mask(design: ConsensusDesign) -> np.ndarray:
    mask = np.zeros((design.N, design.r), dtype=bool)
    off = np.concatenate([[0], np.cumsum(design.r_list)])
    for i in range(design.N):
        mask[i, off[i]:off[i + 1]] = True
    return mask


def stability_terms(K, C, A) -> dict:
    """Norms entering the fusion-step threshold."""
    K = as_matrix(K, "K")
    C = as_matrix(C, "C")
    A = as_matrix(A, "A")
    CA = C @ A
    return {
        "norm_A_KCA": spectral_norm(A - K @ CA),
        "norm_K": spectral_norm(K),
        "norm_CA": spectral_norm(CA),
    }


def min_fusion_steps(design: ConsensusDesign, K, C, A) -> float:
    """Fusion-depth threshold ``l0``; any integer ``l > l0`` keeps the error dynamics stable.

    ``l0 = log_{||G||} ((1 - ||A - KCA||) / (||K|| ||CA||))``.  A negative
    value means every ``l >= 1`` qualifies.
    """
    if design.norm_G >= 1.0:
        raise DesignError(f"spectral norm condition violated: ||G||_2 = {design.norm_G:.6g} >= 1")
    t = stability_terms(K, C, A)
    margin = 1.0 - t["norm_A_KCA"]
    if margin <= 0.0:
        raise DesignError(f"no stability margin: ||A - KCA||_2 = {t['norm_A_KCA']:.6g} >= 1")
    coupling = t["norm_K"] * t["norm_CA"]
    if coupling == 0.0 or design.norm_G == 0.0:
        return -math.inf
    return math.log(margin / coupling) / math.log(design.norm_G)
