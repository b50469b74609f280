"""Analytical covariance machinery for the distributed filter.

Stacking the per-sensor errors ``e = [e_1; ...; e_N]`` gives the linear
recursion

    e[k] = A(l) e[k-1] - B(l) (1 (x) w[k-1]) + D(l) (1 (x) v[k])

with

    A(l) = I (x) (A - KCA) + (I (x) K) G^l (I (x) CA)
    B(l) = I (x) (I - KC)  + (I (x) K) G^l (I (x) C)
    D(l) = (I (x) K) (I - G^l)

The centralized filter is the ``G^l = 0`` member of the same family.  Note
the ``+`` in ``B(l)``: with no fusion (``l = 0``) each sensor free-runs its
prediction and ``B(0) = I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .consensus import ConsensusDesign
from .exceptions import ConvergenceError, DesignError
from .filter import GainDesign
from .linalg import solve_dle, spectral_norm, spectral_radius, symmetrize
from .model import PlantModel, SensorSuite, augment

__all__ = [
    "ErrorSystem",
    "build_error_system",
    "propagate_covariance",
    "propagate_centralized",
    "measurement_error_stats",
    "steady_state",
    "centralized_block",
    "difference_forcing",
    "difference_series",
    "GapRecord",
    "GapReport",
    "gap_sweep",
    "TransientRow",
    "transient_compare",
]

SERIES_TERMS = 200


@dataclass(frozen=True, eq=False)
class ErrorSystem:
    l: int
    N: int
    n: int
    A_l: np.ndarray
    B_l: np.ndarray
    D_l: np.ndarray
    Phi_l: np.ndarray
    A_cc: np.ndarray
    B_cc: np.ndarray
    D_cc: np.ndarray
    Phi_cc: np.ndarray
    # Inputs kept for the measurement-error statistics and the gap identity.
    G_l: np.ndarray = field(repr=False)
    CA: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    Q_stack: np.ndarray = field(repr=False)  # U_N (x) Q
    R_stack: np.ndarray = field(repr=False)  # U_N (x) R
    closed_loop: np.ndarray = field(repr=False)  # A - KCA
    Phi_c: np.ndarray = field(repr=False)  # n x n centralized forcing

    @property
    def A_bar(self) -> np.ndarray:
        return self.A_l - self.A_cc

    @property
    def B_bar(self) -> np.ndarray:
        return self.B_l - self.B_cc

    @property
    def D_bar(self) -> np.ndarray:
        return self.D_l - self.D_cc

    def is_stable(self) -> bool:
        return spectral_radius(self.A_l) < 1.0

    def sensor_block(self, P: np.ndarray, i: int) -> np.ndarray:
        n = self.n
        return P[i * n:(i + 1) * n, i * n:(i + 1) * n]


def build_error_system(plant: PlantModel, suite: SensorSuite, gains: GainDesign,
                       design: ConsensusDesign, l: int) -> ErrorSystem:
    if l < 0:
        raise ValueError("fusion steps must be nonnegative")
    C, R = augment(suite)
    A, Q, K = plant.A, plant.Q, gains.K
    N, n, r = suite.N, plant.n, suite.r
    if design.N != N or design.r != r:
        raise ValueError("consensus design does not match the sensor suite")
    if K.shape != (n, r):
        raise ValueError(f"gain must be {n}x{r}, got {K.shape}")
    I_N = np.eye(N)
    U_N = np.ones((N, N))
    CA = C @ A
    G_l = design.G_power(l)
    IK = np.kron(I_N, K)
    ICA = np.kron(I_N, CA)
    IC = np.kron(I_N, C)
    closed = A - K @ CA
    A_cc = np.kron(I_N, closed)
    B_cc = np.kron(I_N, np.eye(n) - K @ C)
    D_cc = IK
    KG = IK @ G_l
    A_l = A_cc + KG @ ICA
    B_l = B_cc + KG @ IC
    D_l = IK - KG
    Q_stack = np.kron(U_N, Q)
    R_stack = np.kron(U_N, R)
    Phi_l = symmetrize(B_l @ Q_stack @ B_l.T + D_l @ R_stack @ D_l.T)
    Phi_cc = symmetrize(B_cc @ Q_stack @ B_cc.T + D_cc @ R_stack @ D_cc.T)
    I_KC = np.eye(n) - K @ C
    Phi_c = symmetrize(I_KC @ Q @ I_KC.T + K @ R @ K.T)
    return ErrorSystem(
        l=int(l), N=N, n=n,
        A_l=A_l, B_l=B_l, D_l=D_l, Phi_l=Phi_l,
        A_cc=A_cc, B_cc=B_cc, D_cc=D_cc, Phi_cc=Phi_cc,
        G_l=G_l, CA=CA, C=C, Q_stack=Q_stack, R_stack=R_stack,
        closed_loop=closed, Phi_c=Phi_c,
    )


def propagate_covariance(sys: ErrorSystem, P_prev) -> np.ndarray:
    """One step of ``P <- A(l) P A(l)' + Phi(l)``."""
    P_prev = np.asarray(P_prev, dtype=float)
    return symmetrize(sys.A_l @ P_prev @ sys.A_l.T + sys.Phi_l)


def propagate_centralized(sys: ErrorSystem, P_prev) -> np.ndarray:
    P_prev = np.asarray(P_prev, dtype=float)
    return symmetrize(sys.A_cc @ P_prev @ sys.A_cc.T + sys.Phi_cc)


def measurement_error_stats(sys: ErrorSystem, P_prev) -> tuple[np.ndarray, np.ndarray]:
    """Mean map and covariance of the fused measurement error after ``l`` rounds.

    Returns ``(M, P_eps)`` where ``E[eps] = M E[e_prev]`` and ``P_eps`` is the
    error covariance given the previous stacked state-error covariance.
    """
    I_N = np.eye(sys.N)
    ICA = np.kron(I_N, sys.CA)
    IC = np.kron(I_N, sys.C)
    mean_map = sys.G_l @ ICA
    inner = ICA @ np.asarray(P_prev, dtype=float) @ ICA.T + IC @ sys.Q_stack @ IC.T + sys.R_stack
    return mean_map, symmetrize(sys.G_l @ inner @ sys.G_l.T)


def centralized_block(sys: ErrorSystem) -> np.ndarray:
    """Steady ``n x n`` covariance of the fixed-gain centralized filter."""
    return solve_dle(sys.closed_loop, sys.Phi_c)


def steady_state(sys: ErrorSystem) -> tuple[np.ndarray, np.ndarray]:
    """Solve both Lyapunov equations; returns ``(P_l, P_cc)``."""
    rho = spectral_radius(sys.A_l)
    if rho >= 1.0:
        raise DesignError(f"distributed error dynamics unstable at l={sys.l} (rho = {rho:.6g})")
    P_l = solve_dle(sys.A_l, sys.Phi_l)
    P_cc = solve_dle(sys.A_cc, sys.Phi_cc)
    block = np.kron(np.ones((sys.N, sys.N)), centralized_block(sys))
    if spectral_norm(P_cc - block) > 1e-9 * (1.0 + spectral_norm(P_cc)):
        raise ConvergenceError("centralized steady state lost its Kronecker block structure")
    return P_l, P_cc


def difference_forcing(sys: ErrorSystem, P_l) -> np.ndarray:
    """Forcing term of the recursion ``X = A_cc X A_cc' + Phi_bar`` solved by ``P_l - P_cc``."""
    Ab, Bb, Db = sys.A_bar, sys.B_bar, sys.D_bar
    Acc, Bcc, Dcc = sys.A_cc, sys.B_cc, sys.D_cc
    Qs, Rs = sys.Q_stack, sys.R_stack
    return (
        Ab @ P_l @ Acc.T + Acc @ P_l @ Ab.T + Ab @ P_l @ Ab.T
        + Bb @ Qs @ Bcc.T + Bcc @ Qs @ Bb.T + Bb @ Qs @ Bb.T
        + Db @ Rs @ Dcc.T + Dcc @ Rs @ Db.T + Db @ Rs @ Db.T
    )


def difference_series(sys: ErrorSystem, P_l, terms: int = SERIES_TERMS,
                      tail_tol: float = 1e-10) -> np.ndarray:
    """``sum_{k=0}^{terms} A_cc^k Phi_bar (A_cc')^k`` with a tail check.

    The neglected tail equals ``T X T'`` with ``T = A_cc^(terms+1)`` and ``X``
    the full sum, so ``||tail|| <= t^2 ||S|| / (1 - t^2)`` for ``t = ||T||``
    and ``S`` the partial sum.  Raises ConvergenceError if that exceeds
    ``tail_tol * max(1, ||S||)``.
    """
    Phi_bar = difference_forcing(sys, P_l)
    S = np.zeros_like(Phi_bar)
    term = Phi_bar
    for _ in range(terms + 1):
        S = S + term
        term = sys.A_cc @ term @ sys.A_cc.T
    t = spectral_norm(np.linalg.matrix_power(sys.A_cc, terms + 1))
    if t >= 1.0:
        raise ConvergenceError(f"series tail not contracting after {terms} terms", residual=t)
    tail = t * t * spectral_norm(S) / (1.0 - t * t)
    if tail > tail_tol * max(1.0, spectral_norm(S)):
        raise ConvergenceError(f"series tail estimate {tail:.3e} too large", residual=tail)
    return S


@dataclass(frozen=True)
class GapRecord:
    l: int
    gap: float
    bound_radius: float
    bound_norm: float
    stable: bool
    series_error: float  # relative mismatch of the series identity


@dataclass
class GapReport:
    records: list
    M1: float
    M2: float
    rho_G: float
    norm_G: float
    Nr: int
    log_slope: float

    @property
    def radius_regime(self) -> bool:
        return self.rho_G < 1.0

    @property
    def norm_regime(self) -> bool:
        return self.norm_G < 1.0

    def gap(self, l: int) -> float:
        for rec in self.records:
            if rec.l == l:
                return rec.gap
        raise KeyError(l)

    def summary(self) -> dict:
        return {
            "M1": self.M1,
            "M2": self.M2,
            "rho_G": self.rho_G,
            "norm_G": self.norm_G,
            "log_slope": self.log_slope,
            "radius_regime": self.radius_regime,
            "norm_regime": self.norm_regime,
        }


def _log_radius_shape(l: int, Nr: int, rho: float) -> float:
    # log(l^Nr rho^(l - Nr)); l = 0 gives -inf.
    if l == 0 or rho == 0.0:
        return -math.inf
    return Nr * math.log(l) + (l - Nr) * math.log(rho)


def gap_sweep(plant: PlantModel, suite: SensorSuite, gains: GainDesign,
              design: ConsensusDesign, l_range: Iterable[int], check_series: bool = True) -> GapReport:
    """Steady-state gap ``||P_l - P_cc||`` over a range of fusion depths.

    The decay constants are fitted as the largest observed ratio of the gap to
    the respective rate shape, so the bound curves touch the data at one
    point.  Depths where the distributed error dynamics are unstable are
    kept as ``stable=False`` rows with NaN gap.
    """
    l_values = sorted({int(v) for v in l_range})
    if not l_values:
        raise ValueError("empty fusion-step range")
    rho_G, norm_G = design.rho_G, design.norm_G
    Nr = design.N * design.r
    P_cc = None
    raw = []
    for l in l_values:
        sys = build_error_system(plant, suite, gains, design, l)
        if not sys.is_stable():
            raw.append((l, math.nan, False, math.nan))
            continue
        P_l, P_cc_l = steady_state(sys)
        if P_cc is None:
            P_cc = P_cc_l
        diff = P_l - P_cc
        gap = spectral_norm(diff)
        series_err = math.nan
        if check_series:
            S = difference_series(sys, P_l)
            series_err = spectral_norm(S - diff) / max(gap, 1e-300)
        raw.append((l, gap, True, series_err))

    M1 = M2 = math.nan
    ok = [(l, g) for l, g, stable, _ in raw if stable and g > 0.0]
    if ok and rho_G < 1.0:
        M1 = max(math.exp(math.log(g) - _log_radius_shape(l, Nr, rho_G)) for l, g in ok if l > 0)
    if ok and 0.0 < norm_G < 1.0:
        M2 = max(g / norm_G**l for l, g in ok)
    slope = math.nan
    if len(ok) >= 2:
        ls = np.array([l for l, _ in ok], dtype=float)
        slope = float(np.polyfit(ls, np.log([g for _, g in ok]), 1)[0])

    records = []
    for l, g, stable, err in raw:
        b_rad = math.exp(math.log(M1) + _log_radius_shape(l, Nr, rho_G)) if not math.isnan(M1) and l > 0 else math.nan
        b_norm = M2 * norm_G**l if not math.isnan(M2) else math.nan
        records.append(GapRecord(l, g, b_rad, b_norm, stable, err))
    return GapReport(records, M1, M2, rho_G, norm_G, Nr, slope)


@dataclass(frozen=True)
class TransientRow:
    k: int
    gap: float
    sensor_traces: tuple
    central_trace: float


def transient_compare(plant: PlantModel, suite: SensorSuite, gains: GainDesign,
                      design: ConsensusDesign, l: int, horizon: int, P0=None) -> list[TransientRow]:
    """Run the distributed and centralized covariance recursions side by side.

    Both start from ``U_N (x) P0`` (a shared initial estimate), which is the
    equal-initialization premise under which the two coincide as ``l`` grows.
    ``P0`` defaults to the identity.
    """
    sys = build_error_system(plant, suite, gains, design, l)
    n, N = sys.n, sys.N
    P0 = np.eye(n) if P0 is None else np.asarray(P0, dtype=float)
    P = np.kron(np.ones((N, N)), P0)
    P_c = P.copy()
    rows = []
    for k in range(1, horizon + 1):
        P = propagate_covariance(sys, P)
        P_c = propagate_centralized(sys, P_c)
        traces = tuple(float(np.trace(sys.sensor_block(P, i))) for i in range(N))
        rows.append(TransientRow(k, spectral_norm(P - P_c), traces, float(np.trace(P_c[:n, :n]))))
    return rows
