import math

import numpy as np
import pytest

from cvqkd import security
from cvqkd.errors import DomainError
from cvqkd.protocol import Channel, Preparation
from cvqkd.rates import rate_value
from cvqkd.security import (Axis, SweepGrid, distance_to_transmittance, dr_coherent_beta_threshold,
                            max_squeezed_variance_dr, max_tolerable_noise, optimize_displacement,
                            rate_vs_distance_curve, security_region, sigma_limits_high_squeezing)


def grid_scan(v, ch, beta, direction, n=1000):
    sigmas = np.logspace(-4, 2, n)
    rates = np.array([rate_value(Preparation(v, s, s), ch, beta, direction) for s in sigmas])
    i = int(np.argmax(rates))
    return sigmas[i], rates[i]


class TestOptimizeDisplacement:
    @pytest.mark.parametrize("v, eta, eps, beta, direction", [
        (1.0, 0.1, 0.0, 0.999, "rr"),
        (0.5, 0.1, 0.01, 0.6, "rr"),
        (0.1, 0.3, 0.05, 0.9, "rr"),
        (0.5, 0.6, 0.0, 0.9, "dr"),
        (1.0, 0.8, 0.02, 0.95, "dr"),
    ])
    def test_matches_dense_scan(self, v, eta, eps, beta, direction):
        opt = optimize_displacement(v, Channel(eta, eps), beta, direction)
        s_scan, r_scan = grid_scan(v, Channel(eta, eps), beta, direction)
        assert opt.rate >= r_scan - 1e-12
        assert abs(opt.rate - r_scan) <= 1e-4 * abs(r_scan)
        assert opt.sigma == pytest.approx(s_scan, rel=0.05)

    def test_coherent_rr_near_ideal(self):
        opt = optimize_displacement(1.0, Channel(0.1, 0.0), 0.999, "rr")
        assert opt.secure
        # with almost ideal reconciliation the rate keeps growing with modulation
        assert opt.sigma == pytest.approx(security.SIGMA_BOUNDS[1], rel=1e-3)

    def test_low_efficiency_limits_modulation(self):
        opt = optimize_displacement(0.5, Channel(0.1, 0.0), 1e-3, "rr")
        assert opt.secure
        assert opt.sigma <= 1 - 0.5 + 0.05

    def test_squeezing_improves_dr(self):
        sq = optimize_displacement(0.5, Channel(0.6), 0.9, "dr")
        coh = optimize_displacement(1.0, Channel(0.6), 0.9, "dr")
        assert sq.rate > coh.rate > 0

    def test_independent_not_worse(self):
        ch = Channel(0.1, 0.01)
        sym = optimize_displacement(1.0, ch, 0.6, "rr")
        ind = optimize_displacement(1.0, ch, 0.6, "rr", mode="independent")
        assert ind.rate >= sym.rate - 1e-12
        assert ind.sigma_x != ind.sigma_p

    def test_insecure_flag(self):
        opt = optimize_displacement(1.0, Channel(0.1, 0.5), 0.5, "rr")
        assert not opt.secure and opt.rate < 0

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            optimize_displacement(1.0, Channel(0.5), 0.9, "rr", mode="diagonal")


class TestNoiseTolerance:
    def test_zero_efficiency(self):
        res = max_tolerable_noise(0.5, 0.1, 0.0, "rr")
        assert res.epsilon_max == 0 and not res.secure

    @pytest.mark.parametrize("v, beta, reference", [(1.0, 0.6, 1.2e-2), (0.5, 0.6, 6.3e-2)])
    def test_table_entries(self, v, beta, reference):
        res = max_tolerable_noise(v, 0.1, beta, "rr")
        assert res.converged and res.secure
        assert res.epsilon_max == pytest.approx(reference, rel=0.1)

    def test_bracket_invariant(self):
        res = max_tolerable_noise(0.5, 0.1, 0.4, "rr")
        tol = security.EPSILON_TOL
        above = optimize_displacement(0.5, Channel(0.1, res.epsilon_max + tol), 0.4, "rr")
        at = optimize_displacement(0.5, Channel(0.1, res.epsilon_max), 0.4, "rr")
        assert above.rate < 0 < at.rate

    def test_monotone_in_beta(self):
        eps = [max_tolerable_noise(0.7, 0.1, b, "rr").epsilon_max for b in (0.3, 0.5, 0.7)]
        assert eps[0] <= eps[1] <= eps[2]


class TestSqueezingLimitDR:
    def test_coherent_suffices(self):
        assert max_squeezed_variance_dr(0.99, 0.99) == (1.0, True)

    def test_decreasing_with_beta(self):
        betas = (0.6, 0.7, 0.8)
        limits = [max_squeezed_variance_dr(0.6, b) for b in betas]
        assert all(l.secure and 0 < l.v_max < 1 for l in limits)
        assert limits[0].v_max < limits[1].v_max < limits[2].v_max
        # the bisection result separates secure from insecure variances
        for b, lim in zip(betas, limits):
            assert optimize_displacement(lim.v_max, Channel(0.6), b, "dr").rate > 0
            assert optimize_displacement(lim.v_max + 2e-4, Channel(0.6), b, "dr").rate <= 0

    def test_ordering_in_eta(self):
        limits = [max_squeezed_variance_dr(eta, 0.75).v_max for eta in (0.9, 0.7, 0.6)]
        assert limits[0] >= limits[1] >= limits[2]

    @pytest.mark.parametrize("eta", [0.5, 0.45, 0.3])
    def test_no_coherent_dr_beyond_3db(self, eta):
        assert not optimize_displacement(1.0, Channel(eta), 1.0, "dr").secure

    @pytest.mark.parametrize("eta", [0.55, 0.6, 0.7])
    def test_coherent_dr_needs_threshold(self, eta):
        beta = dr_coherent_beta_threshold(eta) - 1e-3
        rates = [rate_value(Preparation(1, s, s), Channel(eta), beta, "dr")
                 for s in np.logspace(-4, 2, 200)]
        assert max(rates) < 0


class TestClosedForms:
    def test_dr_threshold(self):
        assert dr_coherent_beta_threshold(0.6) == pytest.approx(2 / 3)
        assert dr_coherent_beta_threshold(1 - 1e-9) == pytest.approx(0, abs=1e-8)
        assert dr_coherent_beta_threshold(0.5 + 1e-9) == pytest.approx(1, abs=1e-8)
        for eta in (0.5, 1.0, 0.2):
            with pytest.raises(DomainError):
                dr_coherent_beta_threshold(eta)

    def test_sigma_limits(self):
        assert sigma_limits_high_squeezing(0.9) == pytest.approx((0.51317, 19.4868), abs=1e-4)
        assert sigma_limits_high_squeezing(0.25) == pytest.approx((2 / 3, 2))
        assert sigma_limits_high_squeezing(0.0) == (1.0, 1.0)
        assert sigma_limits_high_squeezing(1.0)[1] == math.inf

    @pytest.mark.parametrize("beta", [1e-3, 0.9])
    def test_sigma_limits_are_low_transmittance_roots(self, beta):
        # exact sign changes of the V -> 0 rate approach the closed form as eta -> 0
        lo, hi = sigma_limits_high_squeezing(beta)
        f = lambda s: rate_value(Preparation(1e-3, s, s), Channel(1e-3), beta, "rr")
        assert f(lo * 0.98) < 0 < f(lo * 1.02)
        assert f(hi * 0.98) > 0 > f(hi * 1.05)

    def test_sigma_limits_small_beta_at_eta_tenth(self):
        lo, hi = sigma_limits_high_squeezing(1e-3)
        f = lambda s: rate_value(Preparation(1e-3, s, s), Channel(0.1), 1e-3, "rr")
        assert f(lo - 1e-2) < 0 < f(lo + 1e-2)
        assert f(hi - 1e-2) > 0 > f(hi + 1e-2)

    def test_distance(self):
        assert distance_to_transmittance(0) == 1.0
        assert distance_to_transmittance(25) == pytest.approx(10 ** -0.5)
        assert distance_to_transmittance(25) == pytest.approx(0.3, abs=0.02)
        assert distance_to_transmittance(50) == pytest.approx(0.1)
        with pytest.raises(DomainError):
            distance_to_transmittance(-1)


class TestRegion:
    def grid(self, beta, eta, eps, v=(0.1, 1.0, 4), sigma=(1e-2, 10, 25)):
        return SweepGrid(axes=(Axis("v", *v), Axis("sigma", *sigma, spacing="log")),
                         direction="rr", beta=beta, fixed={"eta": eta, "epsilon": eps})

    def test_high_beta_includes_coherent(self):
        res = security_region(self.grid(0.8, 0.1, 1e-3))
        assert res.secure.any()
        coherent = res.secure[-1]
        assert coherent.any()
        # too little modulation cannot beat imperfect reconciliation
        assert not coherent[0]

    def test_low_beta_only_squeezed(self):
        res = security_region(self.grid(0.2, 0.1, 5e-3, v=(0.5, 1.0, 2)))
        assert res.secure[0].any()
        assert not res.secure[1].any()

    def test_ideal_reconciliation_above_decoupling(self):
        res = security_region(self.grid(1.0, 0.1, 0.0, v=(0.05, 1.0, 6), sigma=(1e-2, 20, 30)))
        above = res.sigma[None, :] >= 1 - res.v[:, None]
        assert res.secure[above].all()

    def test_boundary_refined(self):
        res = security_region(self.grid(0.6, 0.1, 0.01, v=(0.3, 1.0, 3)))
        assert res.boundary
        for v, s in res.boundary:
            lo = rate_value(Preparation(v, s - 2e-4, s - 2e-4), Channel(0.1, 0.01), 0.6, "rr")
            hi = rate_value(Preparation(v, s + 2e-4, s + 2e-4), Channel(0.1, 0.01), 0.6, "rr")
            assert (lo > 0) != (hi > 0)

    def test_axis_validation(self):
        with pytest.raises(DomainError):
            Axis("v", 1, 0, 5)
        with pytest.raises(DomainError):
            Axis("v", 0, 1, 1)
        with pytest.raises(DomainError):
            Axis("sigma", 0, 1, 5, "log")
        with pytest.raises(DomainError):
            self.grid(0.5, 0.1, 0).axis("eta")


class TestDistanceCurve:
    def test_squeezing_extends_range(self):
        d = np.arange(0, 201, 5.0)
        reach = [security.max_secure_distance(rate_vs_distance_curve(v, 0.1, 0.95, "rr", d))
                 for v in (0.1, 0.5, 1.0)]
        assert reach[0] > reach[1] > reach[2]

    def test_beta_ordering(self):
        d = np.arange(0, 41, 5.0)
        low = rate_vs_distance_curve(0.5, 0.1, 0.9, "rr", d)
        high = rate_vs_distance_curve(0.5, 0.1, 0.95, "rr", d)
        assert all(a.rate <= b.rate for a, b in zip(low, high))

    def test_noisy_start(self):
        curve = rate_vs_distance_curve(1.0, 1.5, 0.9, "rr", [0.0, 5.0])
        assert security.max_secure_distance(curve) is None


class TestParallel:
    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("CVQKD_THREADS", "3")
        assert security.worker_count() == 3
        monkeypatch.setenv("CVQKD_THREADS", "0")
        assert security.worker_count() >= 1
        monkeypatch.setenv("CVQKD_THREADS", "x")
        with pytest.raises(DomainError):
            security.worker_count()

    def test_parallel_matches_serial(self, monkeypatch):
        d = [0.0, 10.0, 20.0]
        monkeypatch.setenv("CVQKD_THREADS", "1")
        serial = rate_vs_distance_curve(0.5, 0.05, 0.9, "rr", d)
        monkeypatch.setenv("CVQKD_THREADS", "2")
        parallel = rate_vs_distance_curve(0.5, 0.05, 0.9, "rr", d)
        assert serial == parallel
