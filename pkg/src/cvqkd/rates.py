"""Mutual information, Holevo bounds and the key-rate lower bound.

Eve's entropy is obtained by purification: she is assumed to hold the
environment of the trusted state, so ``S_E`` equals the entropy of the
trusted state and ``S_E|X`` the entropy of the trusted state conditioned on
the reference measurement.

Two readings of the trusted state are available through ``reading``:

``"full"``
    the three-mode ``(A, C, B)`` state including Alice's heterodyne ancilla
    port.  It is pure before the channel, so purification is exact.  Its
    entropy equals that of the source pair ``(A0, B)`` (the heterodyne
    coupling is symplectic and the ancilla is pure), and likewise
    ``S(A, C | x_B) = S(A0 | x_B)``; those two-mode forms are what gets
    evaluated, since the three-mode matrix stores the ancilla's
    anti-squeezed variance next to much smaller terms and loses precision
    for strong squeezing.
``"two_mode"``
    the Alice-Bob pair with mode C traced out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

from . import gaussian
from .errors import DomainError, UnsupportedConfigurationError
from .gaussian import g_function
from .protocol import ALICE, BOB, Channel, Preparation, source_state, trusted_state

log = logging.getLogger(__name__)

Direction = Literal["dr", "rr"]
Detection = Literal["homodyne", "heterodyne"]
Reading = Literal["full", "two_mode"]

DIRECTIONS = ("dr", "rr")
READINGS = ("full", "two_mode")
NEGATIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class ProtocolConfig:
    prep: Preparation
    ch: Channel
    beta: float = 1.0
    direction: Direction = "rr"
    detection: Detection = "homodyne"

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"reconciliation efficiency must lie in [0, 1], got {self.beta}")
        if self.direction not in DIRECTIONS:
            raise DomainError(f"direction must be 'dr' or 'rr', got {self.direction!r}")
        if self.detection not in ("homodyne", "heterodyne"):
            raise DomainError(f"detection must be 'homodyne' or 'heterodyne', got {self.detection!r}")


@dataclass
class KeyRateReport:
    i_ab: float
    chi: float
    rate: float
    method: str
    reading: str = "full"
    beta: float = 1.0
    direction: str = "rr"
    # optional diagnostics, filled by key_rate(..., diagnostics=True)
    chi_alternate: Optional[float] = None
    chi_analytic: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def secure(self) -> bool:
        return self.rate > 0


def _floor(chi: float) -> float:
    return 0.0 if -NEGATIVE_FLOOR <= chi < 0 else chi


def mutual_information(cfg: ProtocolConfig) -> float:
    """Shannon information per symbol on the x quadrature, in bits."""
    lam = 1.0 if cfg.detection == "homodyne" else 2.0
    prep, ch = cfg.prep, cfg.ch
    snr = prep.sigma_x * ch.eta / (lam + ch.eta * (prep.v + ch.epsilon - 1))
    return 0.5 * math.log2(1.0 + snr)


def _check_reading(reading: str) -> None:
    if reading not in READINGS:
        raise DomainError(f"reading must be one of {READINGS}, got {reading!r}")


def holevo_rr(cfg: ProtocolConfig, reading: Reading = "full") -> float:
    """Eve's Holevo information on Bob's x homodyne outcome."""
    _check_reading(reading)
    if reading == "two_mode":
        gamma = gaussian.submatrix(trusted_state(cfg.prep, cfg.ch), [ALICE, BOB])
    else:
        gamma = source_state(cfg.prep, cfg.ch)
    s_e = gaussian.von_neumann_entropy(gamma)
    s_cond = gaussian.von_neumann_entropy(gaussian.condition_on_homodyne(gamma, 1, "x"))
    return _floor(s_e - s_cond)


def holevo_dr(cfg: ProtocolConfig, reading: Reading = "full") -> float:
    """Eve's Holevo information on Alice's x outcome.

    The conditional term always uses the ``(C, B)`` state left after
    Alice's x homodyne on mode A; ``reading`` only selects ``S_E``.
    """
    _check_reading(reading)
    gamma = trusted_state(cfg.prep, cfg.ch)
    if reading == "two_mode":
        s_e = gaussian.von_neumann_entropy(gaussian.submatrix(gamma, [ALICE, BOB]))
    else:
        s_e = gaussian.von_neumann_entropy(source_state(cfg.prep, cfg.ch))
    s_cond = gaussian.von_neumann_entropy(gaussian.condition_on_homodyne(gamma, ALICE, "x"))
    return _floor(s_e - s_cond)


def pure_loss_eigenvalues(prep: Preparation, eta: float) -> tuple[float, float]:
    """Symplectic eigenvalues of Eve's reflected mode before and after Bob's x homodyne."""
    bx, bp = prep.bob_x, prep.bob_p
    ex = bx * (1 - eta) + eta
    ep = bp * (1 - eta) + eta
    c_x = math.sqrt(eta * (1 - eta)) * (1 - bx)
    lam1 = math.sqrt(ex * ep)
    lam2 = math.sqrt((ex - c_x ** 2 / (bx * eta + 1 - eta)) * ep)
    return lam1, lam2


def holevo_pure_loss_rr(cfg: ProtocolConfig) -> float:
    if cfg.ch.epsilon != 0:
        raise UnsupportedConfigurationError("analytic pure-loss Holevo bound needs epsilon = 0")
    lam1, lam2 = pure_loss_eigenvalues(cfg.prep, cfg.ch.eta)
    return _floor(g_function((lam1 - 1) / 2) - g_function((max(lam2, 1.0) - 1) / 2))


def holevo(cfg: ProtocolConfig, reading: Reading = "full") -> float:
    if cfg.direction == "dr":
        return holevo_dr(cfg, reading)
    return holevo_rr(cfg, reading)


def key_rate(cfg: ProtocolConfig, method: str = "purification", reading: Reading = "full",
             diagnostics: bool = False) -> KeyRateReport:
    """Lower bound ``beta * I_AB - chi`` in bits per symbol.

    ``method="pure_loss_analytic"`` is only valid for reverse reconciliation
    over a noiseless channel.  With ``diagnostics`` the other entropy reading
    and, where applicable, the analytic pure-loss value are attached.
    """
    if cfg.detection != "homodyne":
        raise UnsupportedConfigurationError("key rates are only defined for homodyne detection")
    if method == "purification":
        chi = holevo(cfg, reading)
    elif method == "pure_loss_analytic":
        if cfg.direction != "rr":
            raise UnsupportedConfigurationError("analytic pure-loss path covers reverse reconciliation only")
        chi = holevo_pure_loss_rr(cfg)
    else:
        raise DomainError(f"unknown method {method!r}")
    i_ab = mutual_information(cfg)
    report = KeyRateReport(i_ab=i_ab, chi=chi, rate=cfg.beta * i_ab - chi, method=method,
                           reading=reading, beta=cfg.beta, direction=cfg.direction)
    if diagnostics:
        other = "two_mode" if reading == "full" else "full"
        report.chi_alternate = holevo(cfg, other)
        if abs(report.chi_alternate - chi) > 1e-9:
            report.notes.append(f"entropy readings differ: {reading}={chi:.9e}, {other}={report.chi_alternate:.9e}")
            log.debug(report.notes[-1])
        if cfg.direction == "rr" and cfg.ch.epsilon == 0:
            report.chi_analytic = holevo_pure_loss_rr(cfg)
            if method == "purification" and reading == "full" and abs(report.chi_analytic - chi) > 1e-9:
                report.notes.append("purification and analytic pure-loss paths disagree")
    return report


def rate_value(prep: Preparation, ch: Channel, beta: float, direction: Direction,
               reading: Reading = "full") -> float:
    """Key rate as a bare float, for optimizers."""
    cfg = ProtocolConfig(prep, ch, beta, direction)
    return beta * mutual_information(cfg) - holevo(cfg, reading)
