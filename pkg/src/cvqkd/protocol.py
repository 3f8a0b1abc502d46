"""State construction for the squeezed/coherent-state protocol.

The prepare-and-measure picture (squeezed signal of x-variance ``v``,
Gaussian displacement with variances ``sigma_x``, ``sigma_p``) is mapped to
an equivalent entanglement-based source: two oppositely squeezed modes mixed
on a balanced beamsplitter, with Alice heterodyning her half using a
squeezed ancilla of variance ``vm`` in the free port.

Mode order of the three-mode state is ``(A, C, B)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gaussian
from .errors import DomainError, SingularMappingError

ALICE, ANCILLA, BOB = 0, 1, 2


@dataclass(frozen=True)
class Preparation:
    """Signal squeezing ``v`` and displacement variances, all in SNU."""

    v: float
    sigma_x: float
    sigma_p: float

    def __post_init__(self):
        if not self.v > 0:
            raise DomainError(f"squeezed variance v must be positive, got {self.v}")
        if self.sigma_x < 0 or self.sigma_p < 0:
            raise DomainError("displacement variances must be non-negative")

    @classmethod
    def symmetric(cls, v: float, sigma: float) -> "Preparation":
        return cls(v, sigma, sigma)

    @property
    def bob_x(self) -> float:
        """Variance of the transmitted ensemble in x."""
        return self.v + self.sigma_x

    @property
    def bob_p(self) -> float:
        return 1.0 / self.v + self.sigma_p


@dataclass(frozen=True)
class EprSource:
    v1: float
    v2: float
    vm: float

    def __post_init__(self):
        if min(self.v1, self.v2, self.vm) <= 0:
            raise DomainError(f"source variances must be positive, got {self}")


@dataclass(frozen=True)
class Channel:
    """Untrusted channel: transmittance ``eta`` and input-referred excess noise."""

    eta: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"transmittance must lie in (0, 1], got {self.eta}")
        if self.epsilon < 0:
            raise DomainError(f"excess noise must be non-negative, got {self.epsilon}")


def pm_to_epr(prep: Preparation) -> EprSource:
    v, sx, sp = prep.v, prep.sigma_x, prep.sigma_p
    if sx == 0:
        raise SingularMappingError("sigma_x = 0 makes the EPR mapping singular")
    if sp == 0:
        raise SingularMappingError("sigma_p = 0 gives a zero-variance ancilla")
    arg = (v + sx) * (sx + v * sp * (v + sx)) / (1.0 + v * sp)
    assert arg >= 0, arg
    root = math.sqrt(arg)
    vm = v * v * sp * (v + sx) / (sx * (1.0 + v * sp))
    v2 = v + sx + root
    # v1 * v2 = v (v + sx) / (1 + v sp); avoids cancellation in v + sx - root
    v1 = v * (v + sx) / ((1.0 + v * sp) * v2)
    return EprSource(v1, v2, vm)


def rotate_squeezing(src: EprSource) -> EprSource:
    """Source for p-squeezed signals (``V -> 1/V`` for every input)."""
    return EprSource(1.0 / src.v1, 1.0 / src.v2, 1.0 / src.vm)


def build_three_mode_state(src: EprSource) -> np.ndarray:
    """Pure ``(A, C, B)`` covariance matrix before the channel."""
    # inputs: s1, s2, ancilla -> after first coupling (A0, B, ancilla)
    gamma = gaussian.direct_sum(
        gaussian.squeezed_vacuum(src.v1),
        gaussian.squeezed_vacuum(src.v2),
        gaussian.squeezed_vacuum(src.vm),
    )
    gamma = gaussian.apply_beamsplitter(gamma, 0, 1, 0.5)
    gamma = gaussian.apply_beamsplitter(gamma, 0, 2, 0.5)
    order = gaussian._mode_indices([0, 2, 1])
    return gamma[np.ix_(order, order)]


def build_source_state(src: EprSource) -> np.ndarray:
    """Two-mode ``(A0, B)`` state of the source before Alice's heterodyne coupling."""
    gamma = gaussian.direct_sum(gaussian.squeezed_vacuum(src.v1), gaussian.squeezed_vacuum(src.v2))
    return gaussian.apply_beamsplitter(gamma, 0, 1, 0.5)


def apply_channel(gamma, bob_mode: int, ch: Channel) -> np.ndarray:
    """Lossy, noisy channel on one mode: ``v -> eta (v + eps - 1) + 1``, correlations scale by ``sqrt(eta)``."""
    gamma = gaussian.check_covariance(gamma)
    n = gaussian.n_modes(gamma)
    if not 0 <= bob_mode < n:
        raise DomainError(f"mode index {bob_mode} out of range for {n} modes")
    scale = np.ones(2 * n)
    scale[2 * bob_mode:2 * bob_mode + 2] = math.sqrt(ch.eta)
    out = gamma * np.outer(scale, scale)
    noise = 1.0 - ch.eta + ch.eta * ch.epsilon
    for q in (0, 1):
        out[2 * bob_mode + q, 2 * bob_mode + q] += noise
    return out


def trusted_state(prep: Preparation, ch: Channel) -> np.ndarray:
    """Three-mode ``(A, C, B)`` state after the channel acts on Bob's mode."""
    return apply_channel(build_three_mode_state(pm_to_epr(prep)), BOB, ch)


def source_state(prep: Preparation, ch: Channel) -> np.ndarray:
    """Two-mode ``(A0, B)`` source state after the channel acts on B."""
    return apply_channel(build_source_state(pm_to_epr(prep)), 1, ch)


def alice_bob_covariance(src: EprSource, ch: Channel) -> np.ndarray:
    """Closed-form two-mode Alice-Bob matrix after Alice's heterodyne coupling.

    Mode C is traced out.  Correlation signs follow the beamsplitter
    convention of :func:`build_three_mode_state`.
    """
    v1, v2, vm = src.v1, src.v2, src.vm
    va_x = (v1 + v2 + 2 * vm) / 4
    va_p = 1 / (4 * v1) + 1 / (4 * v2) + 1 / (2 * vm)
    vb_x = (v1 + v2) / 2
    vb_p = 1 / (2 * v1) + 1 / (2 * v2)
    c_x = (v2 - v1) / (2 * math.sqrt(2))
    c_p = (1 / v2 - 1 / v1) / (2 * math.sqrt(2))
    eta, eps = ch.eta, ch.epsilon
    s = math.sqrt(eta)
    return np.array([
        [va_x, 0.0, -s * c_x, 0.0],
        [0.0, va_p, 0.0, -s * c_p],
        [-s * c_x, 0.0, eta * (vb_x + eps - 1) + 1, 0.0],
        [0.0, -s * c_p, 0.0, eta * (vb_p + eps - 1) + 1],
    ])


def alice_given_bob_x(src: EprSource, ch: Channel) -> np.ndarray:
    """Closed form of Alice's block conditioned on Bob's x homodyne."""
    v1, v2, vm = src.v1, src.v2, src.vm
    eta, eps = ch.eta, ch.epsilon
    va_x = (v1 + v2 + 2 * vm) / 4
    va_p = 1 / (4 * v1) + 1 / (4 * v2) + 1 / (2 * vm)
    shift = eta * (v1 - v2) ** 2 / (8 + 4 * eta * (v1 + v2 + 2 * eps - 2))
    return np.diag([va_x - shift, va_p])


def conditional_variance_b_given_a(prep: Preparation, ch: Channel) -> float:
    src = pm_to_epr(prep)
    v1, v2, vm = src.v1, src.v2, src.vm
    eta, eps = ch.eta, ch.epsilon
    return 0.5 * (2 - eta * (v1 - v2) ** 2 / (v1 + v2 + 2 * vm) + eta * (v1 + v2 + 2 * eps - 2))


def cloner_correlation(prep: Preparation, ch: Channel) -> float:
    """Bob-Eve correlation under an entangling-cloner attack.

    Diagnostic only.  The noise term is taken verbatim as ``eta * eps``.
    """
    return math.sqrt(ch.eta * (1 - ch.eta)) * (1 - prep.bob_x + ch.eta * ch.epsilon)
