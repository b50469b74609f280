"""Plant and sensor-suite descriptions.

The plant is ``x[k+1] = A x[k] + w[k]``, ``w ~ N(0, Q)``; sensor ``i`` reports
``y_i[k] = C_i x[k] + v_i[k]``, ``v_i ~ N(0, R_i)``.  Noise covariances are
time-invariant.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import as_matrix, symmetrize

__all__ = [
    "PlantModel",
    "Sensor",
    "SensorSuite",
    "augment",
    "check_observability",
    "observability_matrix",
    "constant_velocity",
    "position_sensor",
    "velocity_sensor",
    "tracking_sensor_suite",
    "TRACKING_SENSOR_TYPES",
]

PSD_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PlantModel:
    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        Q = as_matrix(self.Q, "Q")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if Q.shape != A.shape:
            raise ValueError(f"Q must be {A.shape}, got {Q.shape}")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        Q = symmetrize(Q)
        if np.linalg.eigvalsh(Q).min() < -PSD_TOL:
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "Q", _frozen(Q))

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class Sensor:
    C: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        C = as_matrix(self.C, "C")
        R = as_matrix(self.R, "R")
        if R.shape != (C.shape[0], C.shape[0]):
            raise ValueError(f"R must be {C.shape[0]}x{C.shape[0]}, got {R.shape}")
        if not np.allclose(R, R.T, rtol=0, atol=1e-12 * max(1.0, np.abs(R).max())):
            raise ValueError("R must be symmetric")
        R = symmetrize(R)
        if np.linalg.eigvalsh(R).min() <= 0.0:
            raise ValueError("R must be positive definite")
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "R", _frozen(R))

    @property
    def r(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class SensorSuite:
    sensors: tuple

    def __post_init__(self):
        sensors = tuple(s if isinstance(s, Sensor) else Sensor(*s) for s in self.sensors)
        if not sensors:
            raise ValueError("a sensor suite needs at least one sensor")
        cols = {s.C.shape[1] for s in sensors}
        if len(cols) != 1:
            raise ValueError(f"observation matrices disagree on state dimension: {sorted(cols)}")
        object.__setattr__(self, "sensors", sensors)

    @property
    def N(self) -> int:
        return len(self.sensors)

    @property
    def r_list(self) -> list[int]:
        return [s.r for s in self.sensors]

    @property
    def r(self) -> int:
        return sum(self.r_list)

    @property
    def n(self) -> int:
        return self.sensors[0].C.shape[1]

    def offsets(self) -> np.ndarray:
        """Start index of each sensor's rows in the stacked measurement vector."""
        return np.concatenate([[0], np.cumsum(self.r_list)])


def augment(suite: SensorSuite) -> tuple[np.ndarray, np.ndarray]:
    """Stack the observation matrices and block-diagonalise the noise covariances."""
    C = np.vstack([s.C for s in suite.sensors])
    R = np.zeros((suite.r, suite.r))
    off = suite.offsets()
    for s, a, b in zip(suite.sensors, off[:-1], off[1:]):
        R[a:b, a:b] = s.R
    return C, R


def observability_matrix(C, A) -> np.ndarray:
    C = as_matrix(C, "C")
    A = as_matrix(A, "A")
    blocks = [C]
    for _ in range(A.shape[0] - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def check_observability(C, A) -> bool:
    """Rank test on ``[C; CA; ...; CA^(n-1)]`` with a relative singular-value cutoff."""
    O = observability_matrix(C, A)
    if as_matrix(C).shape[1] != as_matrix(A).shape[0]:
        raise ValueError("C and A do not conform")
    sv = np.linalg.svd(O, compute_uv=False)
    if sv[0] == 0.0:
        return False
    rank = int(np.sum(sv > 1e-9 * sv[0]))
    return rank == as_matrix(A).shape[0]


def constant_velocity(T: float) -> PlantModel:
    """Planar constant-velocity target, state ordered ``[px, py, vx, vy]``."""
    I2 = np.eye(2)
    A = np.block([[I2, T * I2], [np.zeros((2, 2)), I2]])
    Qbar = np.array([[T**3 / 3, T**2 / 2], [T**2 / 2, T]])
    Q = np.block([[Qbar, 0.5 * Qbar], [0.5 * Qbar, Qbar]])
    return PlantModel(A, Q)


def position_sensor(R=((1.0, 0.0), (0.0, 1.0))) -> Sensor:
    return Sensor(np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]]), np.array(R, dtype=float))


def velocity_sensor(R=((5.0, 0.0), (0.0, 5.0))) -> Sensor:
    return Sensor(np.array([[0, 0, 1.0, 0], [0, 0, 0, 1.0]]), np.array(R, dtype=float))


# Sensors 1, 2, 4 measure position; 3 and 5 measure velocity.
TRACKING_SENSOR_TYPES = ("position", "position", "velocity", "position", "velocity")


def tracking_sensor_suite(types: Sequence[str] = TRACKING_SENSOR_TYPES) -> SensorSuite:
    make = {"position": position_sensor, "velocity": velocity_sensor}
    return SensorSuite(tuple(make[t]() for t in types))
