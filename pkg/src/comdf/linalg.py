"""Dense real-matrix kernel.

Kronecker assembly, spectral radius and norm, fixed-point solvers for the
discrete algebraic Riccati equation (DARE) and the discrete Lyapunov
equation (DLE), and the binomial bound on the norm of a matrix power.

Matrices are plain ``numpy.ndarray`` objects; :func:`as_matrix` is the
single validation point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DesignError

__all__ = [
    "Spectrum",
    "as_matrix",
    "kron",
    "spectral_radius",
    "spectral_norm",
    "spectrum",
    "symmetrize",
    "solve_dare",
    "dare_residual",
    "solve_dle",
    "power_norm_bound",
]


def as_matrix(M, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array, raising ValueError otherwise."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


def _square(M, name="matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {M.shape}")
    return M


def symmetrize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def kron(A, B) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is ``A[i, j] * B``."""
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus.

    Uses LAPACK's Hessenberg/shifted-QR eigenvalue routine, which handles the
    complex dominant pairs that arise for nonsymmetric (directed-graph)
    matrices.
    """
    M = _square(M)
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def spectral_norm(M) -> float:
    """Largest singular value."""
    M = as_matrix(M)
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True)
class Spectrum:
    radius: float
    norm2: float


def spectrum(M) -> Spectrum:
    return Spectrum(spectral_radius(M), spectral_norm(M))


def _small_step(step: np.ndarray, X: np.ndarray, tol: float) -> bool:
    # Frobenius checks: ||S||_2 <= ||S||_F and ||X||_F / sqrt(n) <= ||X||_2,
    # so this never stops later than the spectral-norm criterion would allow.
    scale = max(1.0, np.linalg.norm(X) / math.sqrt(X.shape[0]))
    return np.linalg.norm(step) <= tol * scale


def _riccati_map(A, C, Q, R, P):
    APCt = A @ P @ C.T
    S = C @ P @ C.T + R
    return symmetrize(A @ P @ A.T + Q - APCt @ np.linalg.solve(S, APCt.T))


def dare_residual(A, C, Q, R, P) -> float:
    """Spectral norm of ``P - (APA' + Q - APC'(CPC'+R)^-1 CPA')``."""
    return spectral_norm(P - _riccati_map(A, C, Q, R, P))


def solve_dare(A, C, Q, R, tol=1e-12, max_iter=100_000) -> np.ndarray:
    """Solve the filtering DARE by iterating the Riccati recursion.

    Finds ``P >= 0`` with ``P = A P A' + Q - A P C' (C P C' + R)^{-1} C P A'``,
    starting from ``P = Q``.  The iteration stops once successive iterates
    differ by at most ``tol * max(1, ||P||_2)`` in spectral norm.

    Parameters
    ----------
    A : (n, n) array_like
    C : (r, n) array_like
    Q : (n, n) array_like, symmetric PSD
    R : (r, r) array_like, symmetric PD
    tol : float
    max_iter : int

    Returns
    -------
    P : (n, n) ndarray

    Raises
    ------
    ConvergenceError
        If the cap is reached or the residual contract fails.
    ValueError
        On dimension mismatch.
    """
    A = _square(A, "A")
    n = A.shape[0]
    C = as_matrix(C, "C")
    Q = _square(Q, "Q")
    R = _square(R, "R")
    if C.shape[1] != n or Q.shape[0] != n or R.shape[0] != C.shape[0]:
        raise ValueError(
            f"dimension mismatch: A {A.shape}, C {C.shape}, Q {Q.shape}, R {R.shape}"
        )
    P = symmetrize(Q)
    for it in range(1, max_iter + 1):
        P_next = _riccati_map(A, C, Q, R, P)
        diff = P_next - P
        P = P_next
        if _small_step(diff, P, tol):
            break
    else:
        raise ConvergenceError(
            f"Riccati recursion did not converge in {max_iter} iterations "
            f"(last increment {spectral_norm(diff):.3e})",
            residual=dare_residual(A, C, Q, R, P),
            iterations=max_iter,
        )
    res = dare_residual(A, C, Q, R, P)
    if res > 1e-9 * (1.0 + spectral_norm(P)):
        raise ConvergenceError(
            f"DARE residual {res:.3e} exceeds tolerance", residual=res, iterations=it
        )
    return P


def solve_dle(F, Phi, tol=1e-13, max_iter=200_000) -> np.ndarray:
    """Solve ``X = F X F' + Phi`` for Schur-stable ``F``.

    Sums the series by the fixed-point recursion ``X <- F X F' + Phi`` from
    ``X = Phi``; stops when the increment is at most ``tol * max(1, ||X||_2)``.
    """
    F = _square(F, "F")
    Phi = _square(Phi, "Phi")
    if F.shape != Phi.shape:
        raise ValueError(f"dimension mismatch: F {F.shape}, Phi {Phi.shape}")
    rho = spectral_radius(F)
    if rho >= 1.0:
        raise DesignError(f"Lyapunov equation needs a Schur-stable matrix, rho = {rho:.6g}")
    symmetric = np.allclose(Phi, Phi.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Phi).max()))
    X = Phi.copy()
    for it in range(1, max_iter + 1):
        X_next = F @ X @ F.T + Phi
        if symmetric:
            X_next = symmetrize(X_next)
        diff = X_next - X
        X = X_next
        if _small_step(diff, X, tol):
            break
    else:
        step = spectral_norm(diff)
        raise ConvergenceError(
            f"Lyapunov iteration did not converge in {max_iter} iterations "
            f"(last increment {step:.3e})",
            residual=step,
            iterations=max_iter,
        )
    res = spectral_norm(X - F @ X @ F.T - Phi)
    if res > 1e-9 * (1.0 + spectral_norm(X)):
        raise ConvergenceError(
            f"DLE residual {res:.3e} exceeds tolerance", residual=res, iterations=it
        )
    return X


def power_norm_bound(M, k: int) -> float:
    """Upper bound on ``||M^k||_2`` from the norm and spectral radius of ``M``.

    ``sqrt(n) * sum_j C(n-1, j) C(k, j) ||M||^j rho(M)^(k-j)`` for
    ``j = 0 .. min(n-1, k)``.
    """
    M = _square(M)
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = M.shape[0]
    nrm = spectral_norm(M)
    rho = spectral_radius(M)
    total = 0.0
    for j in range(min(n - 1, k) + 1):
        total += math.comb(n - 1, j) * math.comb(k, j) * nrm**j * rho ** (k - j)
    return math.sqrt(n) * total
