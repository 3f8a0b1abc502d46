"""Monte-Carlo simulation of the prepare-and-measure scheme.

Only trusted-party statistics are sampled.  Random numbers come from
``numpy.random.Generator(PCG64(seed))`` with ``standard_normal`` (ziggurat),
so results are reproducible across platforms for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .protocol import Channel, Preparation

NO_MODULATION = 1e-6


@dataclass(frozen=True)
class RunStats:
    n_samples: int
    var_a_x: float
    var_a_p: float
    var_b_x: float
    var_b_p: float
    cov_ab_x: float
    cov_ab_p: float
    mutual_information: float
    se_var_b_x: float
    se_var_b_p: float
    se_cov_ab_x: float
    se_cov_ab_p: float
    se_mutual_information: float

    def to_dict(self) -> dict:
        return asdict(self)


def _var_se(var: float, n: int) -> float:
    return var * math.sqrt(2.0 / max(n - 1, 1))


def simulate_pm(prep: Preparation, ch: Channel, n: int, seed=None) -> RunStats:
    """Draw ``n`` displacements and Bob outcomes and return second moments.

    Zero displacement variances are replaced by ``1e-6``.  Bob's outcome in
    each quadrature is Gaussian around ``sqrt(eta) * a`` with the variance of
    the squeezed signal after the channel.
    """
    if n < 1:
        raise DomainError(f"sample count must be at least 1, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    sx = prep.sigma_x or NO_MODULATION
    sp = prep.sigma_p or NO_MODULATION
    a = rng.standard_normal((2, n)) * np.sqrt([[sx], [sp]])
    noise_var = np.array([[ch.eta * (prep.v + ch.epsilon - 1) + 1],
                          [ch.eta * (1 / prep.v + ch.epsilon - 1) + 1]])
    b = math.sqrt(ch.eta) * a + rng.standard_normal((2, n)) * np.sqrt(noise_var)

    ddof = 1 if n > 1 else 0
    va = a.var(axis=1, ddof=ddof)
    vb = b.var(axis=1, ddof=ddof)
    am = a - a.mean(axis=1, keepdims=True)
    bm = b - b.mean(axis=1, keepdims=True)
    cov = (am * bm).sum(axis=1) / max(n - ddof, 1)

    if n < 2:
        # a single draw carries no correlation information
        rho2, mi = 0.0, math.nan
    else:
        rho2 = cov[0] ** 2 / (va[0] * vb[0])
        mi = -0.5 * math.log2(1.0 - rho2)
    se_cov = np.sqrt((va * vb + cov ** 2) / n)
    # delta method on -1/2 log2(1 - rho^2) with se(rho) ~ (1 - rho^2)/sqrt(n)
    se_mi = math.sqrt(rho2) / (math.log(2) * math.sqrt(n))
    return RunStats(
        n_samples=n,
        var_a_x=float(va[0]), var_a_p=float(va[1]),
        var_b_x=float(vb[0]), var_b_p=float(vb[1]),
        cov_ab_x=float(cov[0]), cov_ab_p=float(cov[1]),
        mutual_information=float(mi),
        se_var_b_x=_var_se(float(vb[0]), n), se_var_b_p=_var_se(float(vb[1]), n),
        se_cov_ab_x=float(se_cov[0]), se_cov_ab_p=float(se_cov[1]),
        se_mutual_information=float(se_mi),
    )


def predicted_moments(prep: Preparation, ch: Channel) -> dict:
    """Analytic counterparts of the :class:`RunStats` moments."""
    sx = prep.sigma_x or NO_MODULATION
    sp = prep.sigma_p or NO_MODULATION
    vb_x = ch.eta * (prep.v + sx + ch.epsilon - 1) + 1
    vb_p = ch.eta * (1 / prep.v + sp + ch.epsilon - 1) + 1
    c_x = math.sqrt(ch.eta) * sx
    return {
        "var_b_x": vb_x,
        "var_b_p": vb_p,
        "cov_ab_x": c_x,
        "cov_ab_p": math.sqrt(ch.eta) * sp,
        "mutual_information": 0.5 * math.log2(vb_x / (vb_x - c_x ** 2 / sx)),
    }
