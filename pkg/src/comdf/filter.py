"""Online estimators: the distributed filter bank and the fixed-gain centralized filter.

Both share one precomputed steady-state gain ``K``.  State arrays may carry
leading batch axes (Monte Carlo trials); the last axis is the state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import ConsensusDesign, fuse_measurements
from .exceptions import DesignError
from .linalg import as_matrix, solve_dare, spectral_radius
from .model import PlantModel

__all__ = [
    "GainDesign",
    "design_gain",
    "FilterBank",
    "CentralState",
    "comdf_step",
    "ckf_step",
]


@dataclass(frozen=True, eq=False)
class GainDesign:
    """Steady-state Riccati solution ``P`` (one-step prediction covariance) and gain ``K``."""

    A: np.ndarray
    C: np.ndarray
    P: np.ndarray
    K: np.ndarray

    @property
    def closed_loop(self) -> np.ndarray:
        """``A - K C A``, the centralized error transition."""
        return self.A - self.K @ self.C @ self.A


def design_gain(plant: PlantModel, C, R) -> GainDesign:
    """Solve the DARE and form ``K = P C' (C P C' + R)^-1``.

    Raises DesignError if ``A - KCA`` is not Schur stable, which means the
    pair ``(C, A)`` was not observable after all.
    """
    C = as_matrix(C, "C")
    R = as_matrix(R, "R")
    P = solve_dare(plant.A, C, plant.Q, R)
    S = C @ P @ C.T + R
    K = np.linalg.solve(S.T, (P @ C.T).T).T
    rho = spectral_radius(plant.A - K @ C @ plant.A)
    if rho >= 1.0:
        raise DesignError(f"A - KCA is not Schur stable (rho = {rho:.6g}); check observability")
    for arr in (P, K):
        arr.setflags(write=False)
    return GainDesign(plant.A, C, P, K)


@dataclass(frozen=True, eq=False)
class FilterBank:
    estimates: np.ndarray  # (..., N, n) posterior estimates
    time: int = 0

    @classmethod
    def initial(cls, x0_hat, n_sensors: int) -> "FilterBank":
        """Every sensor starts from the same estimate ``x0_hat`` (shape ``(..., n)``)."""
        x0_hat = np.asarray(x0_hat, dtype=float)
        est = np.repeat(x0_hat[..., None, :], n_sensors, axis=-2)
        return cls(est, 0)


@dataclass(frozen=True, eq=False)
class CentralState:
    estimate: np.ndarray  # (..., n)
    time: int = 0


def comdf_step(
    bank: FilterBank,
    gains: GainDesign,
    design: ConsensusDesign,
    measurements,
    fusion_steps: int,
    anchor_own: bool = False,
) -> FilterBank:
    """Advance every sensor by one time step.

    Predict, seed each sensor's measurement estimate from its own prediction,
    run ``fusion_steps`` consensus rounds against the true measurements, then
    correct with the shared gain.
    """
    if fusion_steps < 1:
        raise ValueError("fusion_steps must be at least 1")
    A, C, K = gains.A, gains.C, gains.K
    x = np.asarray(bank.estimates, dtype=float)
    y = np.asarray(measurements, dtype=float)
    if x.shape[-2] != design.N or x.shape[-1] != A.shape[0]:
        raise ValueError(f"estimates must end in ({design.N}, {A.shape[0]}), got {x.shape}")
    if y.shape[-1] != C.shape[0]:
        raise ValueError(f"measurements must have length {C.shape[0]}, got {y.shape[-1]}")
    x_pred = x @ A.T
    z_pred = x_pred @ C.T  # (..., N, r)
    z = fuse_measurements(
        design,
        z_pred.reshape(z_pred.shape[:-2] + (-1,)),
        y,
        fusion_steps,
        anchor_own=anchor_own,
    ).reshape(z_pred.shape)
    x_post = x_pred + (z - z_pred) @ K.T
    return FilterBank(x_post, bank.time + 1)


def ckf_step(state: CentralState, gains: GainDesign, measurements) -> CentralState:
    A, C, K = gains.A, gains.C, gains.K
    x_pred = np.asarray(state.estimate, dtype=float) @ A.T
    y = np.asarray(measurements, dtype=float)
    if y.shape[-1] != C.shape[0]:
        raise ValueError(f"measurements must have length {C.shape[0]}, got {y.shape[-1]}")
    return CentralState(x_pred + (y - x_pred @ C.T) @ K.T, state.time + 1)
