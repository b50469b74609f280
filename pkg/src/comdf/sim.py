"""Seeded trajectory generation and Monte Carlo MSE estimation.

Random streams
--------------
Every trial owns independent PCG64 generators seeded with
``numpy.random.SeedSequence([seed, trial_index, purpose])``, where
``purpose`` is 0 for the plant/measurement noise and 1 for the initial
estimate.  Trials are therefore reproducible individually and independent
of evaluation order.  Standard normals come from numpy's ziggurat sampler
(``Generator.standard_normal``) and are coloured with the symmetric square
root of the covariance (eigen-decomposition, negative eigenvalues clipped),
which also covers singular covariances such as ``Q = 0``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .consensus import ConsensusDesign, design_from_policy
from .filter import CentralState, FilterBank, GainDesign, ckf_step, comdf_step, design_gain
from .graph import DiGraph
from .model import PlantModel, SensorSuite, augment

__all__ = [
    "ScenarioConfig",
    "MseSeries",
    "psd_sqrt",
    "trial_rng",
    "generate_trial",
    "initial_estimate",
    "run_monte_carlo",
]

NOISE_STREAM = 0
INIT_STREAM = 1


@dataclass(eq=False)
class ScenarioConfig:
    plant: PlantModel
    suite: SensorSuite
    graph: DiGraph
    fusion_steps: int = 10
    horizon: int = 400
    trials: int = 1000
    seed: int = 0
    x0: np.ndarray = None
    P0: np.ndarray = None
    mu_policy: str = "distributed"
    slack: float = 1.0
    shift: float = 1.0
    mu_table: np.ndarray = None
    init_mode: str = "shared"
    anchor_own_measurement: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = self.plant.n
        if self.suite.n != n:
            raise ValueError(f"sensors observe {self.suite.n} states, plant has {n}")
        if self.graph.n_nodes != self.suite.N:
            raise ValueError(f"graph has {self.graph.n_nodes} nodes for {self.suite.N} sensors")
        self.x0 = np.zeros(n) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(-1)
        self.P0 = np.eye(n) if self.P0 is None else np.asarray(self.P0, dtype=float)
        if self.x0.shape != (n,):
            raise ValueError(f"x0 must have length {n}")
        if self.P0.shape != (n, n) or not np.allclose(self.P0, self.P0.T):
            raise ValueError(f"P0 must be a symmetric {n}x{n} matrix")
        if np.linalg.eigvalsh(self.P0).min() < -1e-12:
            raise ValueError("P0 must be positive semidefinite")
        if self.trials < 1 or self.horizon < 1:
            raise ValueError("trials and horizon must be at least 1")
        if self.fusion_steps < 1:
            raise ValueError("fusion_steps must be at least 1")
        if self.init_mode not in ("shared", "independent"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")

    def __eq__(self, other):
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        from .scenario import scenario_to_dict

        return scenario_to_dict(self) == scenario_to_dict(other)

    __hash__ = None

    def augmented(self):
        if "CR" not in self._cache:
            self._cache["CR"] = augment(self.suite)
        return self._cache["CR"]

    def consensus_design(self) -> ConsensusDesign:
        if "design" not in self._cache:
            self._cache["design"] = design_from_policy(
                self.graph, self.suite.r_list, self.mu_policy,
                slack=self.slack, shift=self.shift, mu_table=self.mu_table,
            )
        return self._cache["design"]

    def gains(self) -> GainDesign:
        if "gains" not in self._cache:
            C, R = self.augmented()
            self._cache["gains"] = design_gain(self.plant, C, R)
        return self._cache["gains"]


def psd_sqrt(S) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def trial_rng(seed: int, trial_index: int, purpose: int = NOISE_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial_index), int(purpose)])))


def generate_trial(cfg: ScenarioConfig, trial_index: int) -> tuple[np.ndarray, np.ndarray]:
    """True states ``x_1..x_K`` and stacked measurements ``y_1..y_K``.

    ``x_0 = cfg.x0``; ``x_k = A x_{k-1} + w_{k-1}`` and ``y_k = C x_k + v_k``.
    """
    C, R = cfg.augmented()
    A, Q = cfg.plant.A, cfg.plant.Q
    n, r, K = cfg.plant.n, C.shape[0], cfg.horizon
    rng = trial_rng(cfg.seed, trial_index, NOISE_STREAM)
    w = rng.standard_normal((K, n)) @ psd_sqrt(Q)
    v = rng.standard_normal((K, r)) @ psd_sqrt(R)
    states = np.empty((K, n))
    x = cfg.x0
    for k in range(K):
        x = A @ x + w[k]
        states[k] = x
    return states, states @ C.T + v


def initial_estimate(cfg: ScenarioConfig, trial_index: int) -> np.ndarray:
    """Initial estimates, shape ``(N, n)``: one shared draw or one per sensor."""
    rng = trial_rng(cfg.seed, trial_index, INIT_STREAM)
    root = psd_sqrt(cfg.P0)
    count = 1 if cfg.init_mode == "shared" else cfg.suite.N
    draws = cfg.x0 + rng.standard_normal((count, cfg.plant.n)) @ root
    return np.repeat(draws, cfg.suite.N, axis=0) if count == 1 else draws


@dataclass(eq=False)
class MseSeries:
    """Per-step mean squared errors; row ``k-1`` holds time step ``k``."""

    sensors: np.ndarray  # (K, N)
    central: np.ndarray  # (K,)

    @property
    def horizon(self) -> int:
        return self.sensors.shape[0]

    def steady(self, start: int | None = None) -> tuple[np.ndarray, float]:
        """Average over steps ``start..K`` (default: the second half)."""
        start = self.horizon // 2 + 1 if start is None else start
        window = slice(start - 1, None)
        return self.sensors[window].mean(axis=0), float(self.central[window].mean())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,sensor_id,mse\n")
        for k in range(self.horizon):
            buf.write(f"{k + 1},0,{self.central[k]:.17g}\n")
            for i, val in enumerate(self.sensors[k], start=1):
                buf.write(f"{k + 1},{i},{val:.17g}\n")
        return buf.getvalue()


def run_monte_carlo(cfg: ScenarioConfig, batch_size: int = 1000) -> MseSeries:
    """Monte Carlo MSE of every sensor and of the centralized filter.

    All filters in a trial see the same measurement realisation and start
    from that trial's initial estimate(s).  Trials are processed in fixed
    index order in batches; squared errors are summed per batch and then
    across batches in order, so results do not depend on scheduling.
    """
    design = cfg.consensus_design()
    gains = cfg.gains()
    N, K = cfg.suite.N, cfg.horizon
    sum_sensor = np.zeros((K, N))
    sum_central = np.zeros(K)
    for start in range(0, cfg.trials, batch_size):
        idx = range(start, min(start + batch_size, cfg.trials))
        data = [generate_trial(cfg, t) for t in idx]
        states = np.stack([d[0] for d in data])  # (M, K, n)
        meas = np.stack([d[1] for d in data])  # (M, K, r)
        init = np.stack([initial_estimate(cfg, t) for t in idx])  # (M, N, n)
        bank = FilterBank(init, 0)
        central = CentralState(init[:, 0, :], 0)
        for k in range(K):
            bank = comdf_step(bank, gains, design, meas[:, k], cfg.fusion_steps,
                              anchor_own=cfg.anchor_own_measurement)
            central = ckf_step(central, gains, meas[:, k])
            truth = states[:, k]
            sum_sensor[k] += ((bank.estimates - truth[:, None, :]) ** 2).sum(axis=2).sum(axis=0)
            sum_central[k] += ((central.estimate - truth) ** 2).sum(axis=1).sum(axis=0)
    return MseSeries(sum_sensor / cfg.trials, sum_central / cfg.trials)
