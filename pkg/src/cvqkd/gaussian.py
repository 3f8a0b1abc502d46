"""Covariance-matrix algebra for Gaussian states.

Matrices are plain ``numpy`` arrays in shot-noise units with quadrature
ordering ``(x1, p1, x2, p2, ...)``.  Entropies are in bits.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMeasurementError, DomainError, PhysicalityError, ShapeError

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9

QUADRATURES = {"x": 0, "p": 1}


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with blocks ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_matrix(gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ShapeError(f"covariance matrix must be square, got shape {gamma.shape}")
    if gamma.shape[0] == 0 or gamma.shape[0] % 2:
        raise ShapeError(f"covariance matrix must have even dimension, got {gamma.shape[0]}")
    if not np.allclose(gamma, gamma.T, rtol=0.0, atol=SYMMETRY_TOL):
        raise ShapeError("covariance matrix is not symmetric")
    return gamma


def check_covariance(gamma, physical: bool = False) -> np.ndarray:
    """Validate ``gamma`` and return it as a float array.

    Raises :class:`ShapeError` for non-square, odd-sized or asymmetric input
    and :class:`DomainError` for non-positive diagonal entries.  With
    ``physical=True`` the symplectic spectrum is also checked.
    """
    gamma = _as_matrix(gamma)
    if np.any(np.diag(gamma) <= 0):
        raise DomainError("covariance matrix has non-positive diagonal entries")
    if physical:
        nu = symplectic_eigenvalues(gamma)
        if nu[-1] < 1.0 - PHYSICALITY_TOL:
            raise PhysicalityError(f"symplectic eigenvalue {nu[-1]:.12g} below 1")
    return gamma


def n_modes(gamma: np.ndarray) -> int:
    return gamma.shape[0] // 2


def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Symplectic spectrum of ``gamma``, one value per mode, sorted descending.

    Each mode is first rescaled by a local squeezer ``diag(s, 1/s)`` that
    equalizes its x and p variances (a symplectic congruence, so the
    spectrum is unchanged but conditioning improves).  The spectrum is then
    read off the Hermitian form ``i * g^{1/2} Omega g^{1/2}``, whose
    eigenvalues come in pairs ``+nu, -nu``.
    """
    gamma = check_covariance(gamma)
    n = n_modes(gamma)
    d = np.diag(gamma)
    scale = np.repeat((d[1::2] / d[0::2]) ** 0.25, 2)
    scale[1::2] = 1.0 / scale[1::2]
    gamma = gamma * np.outer(scale, scale)
    w, u = np.linalg.eigh(gamma)
    if w[0] <= 0:
        raise PhysicalityError("covariance matrix is not positive definite")
    root = (u * np.sqrt(w)) @ u.T
    h = 1j * (root @ symplectic_form(n) @ root)
    ev = np.linalg.eigvalsh((h + h.conj().T) / 2)
    return np.sort(ev[n:])[::-1].copy()


def g_function(x: float) -> float:
    """``(x+1) log2(x+1) - x log2(x)``, continuous at ``x = 0``."""
    if x < 0:
        raise DomainError(f"g_function needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return float((x + 1) * np.log2(x + 1) - x * np.log2(x))


def entropy_from_spectrum(nu) -> float:
    total = 0.0
    for value in nu:
        if value < 1.0 - PHYSICALITY_TOL:
            raise PhysicalityError(f"symplectic eigenvalue {value:.12g} below 1")
        total += g_function((max(value, 1.0) - 1.0) / 2.0)
    return total


def von_neumann_entropy(gamma) -> float:
    """Von Neumann entropy in bits of the Gaussian state with covariance ``gamma``."""
    return entropy_from_spectrum(symplectic_eigenvalues(gamma))


def _mode_indices(modes) -> list[int]:
    return [2 * m + q for m in modes for q in (0, 1)]


def submatrix(gamma, modes) -> np.ndarray:
    """Reduced covariance matrix of the listed modes (partial trace)."""
    gamma = np.asarray(gamma, dtype=float)
    idx = _mode_indices(modes)
    return gamma[np.ix_(idx, idx)]


def condition_on_homodyne(gamma, measured_mode: int, quadrature: str = "x") -> np.ndarray:
    """Covariance of the remaining modes after homodyning one quadrature.

    The Moore-Penrose inverse of the rank-one projected block reduces to the
    reciprocal of the measured variance, so the update is
    ``gamma_kept - c c^T / v`` with ``c`` the cross-covariance column.
    """
    gamma = _as_matrix(gamma)
    n = n_modes(gamma)
    if n < 2:
        raise ShapeError("conditioning needs at least two modes")
    if not 0 <= measured_mode < n:
        raise DomainError(f"mode index {measured_mode} out of range for {n} modes")
    if quadrature not in QUADRATURES:
        raise DomainError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    row = 2 * measured_mode + QUADRATURES[quadrature]
    variance = gamma[row, row]
    if variance <= 0:
        raise DegenerateMeasurementError(f"measured variance {variance} is not positive")
    kept = _mode_indices(m for m in range(n) if m != measured_mode)
    c = gamma[kept, row]
    out = gamma[np.ix_(kept, kept)] - np.outer(c, c) / variance
    return (out + out.T) / 2


def beamsplitter_matrix(n: int, mode_a: int, mode_b: int, transmittance: float) -> np.ndarray:
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {transmittance}")
    if mode_a == mode_b or not (0 <= mode_a < n and 0 <= mode_b < n):
        raise DomainError(f"invalid mode pair ({mode_a}, {mode_b}) for {n} modes")
    t = np.sqrt(transmittance)
    r = np.sqrt(1.0 - transmittance)
    s = np.eye(2 * n)
    for q in (0, 1):
        i, j = 2 * mode_a + q, 2 * mode_b + q
        s[i, i], s[i, j] = t, r
        s[j, i], s[j, j] = r, -t
    return s


def apply_beamsplitter(gamma, mode_a: int, mode_b: int, transmittance: float) -> np.ndarray:
    """Mix two modes: ``a' = sqrt(T) a + sqrt(1-T) b``, ``b' = sqrt(1-T) a - sqrt(T) b``."""
    gamma = check_covariance(gamma)
    s = beamsplitter_matrix(n_modes(gamma), mode_a, mode_b, transmittance)
    out = s @ gamma @ s.T
    return (out + out.T) / 2


def direct_sum(*blocks) -> np.ndarray:
    """Block-diagonal covariance matrix of independent modes."""
    size = sum(np.shape(b)[0] for b in blocks)
    out = np.zeros((size, size))
    k = 0
    for b in blocks:
        d = np.shape(b)[0]
        out[k:k + d, k:k + d] = b
        k += d
    return out


def squeezed_vacuum(x_variance: float) -> np.ndarray:
    """Pure single-mode state ``diag(v, 1/v)``."""
    if x_variance <= 0:
        raise DomainError(f"squeezed variance must be positive, got {x_variance}")
    return np.diag([x_variance, 1.0 / x_variance])
