import math

import numpy as np
import pytest
from scipy import stats

from paoi_lab.channel import (los_probability, sample_fading, transmit_power,
                              transmit_power_pdf)
from paoi_lab.scenario import Scenario, environment_scenario


class TestLosProbability:
    def test_overhead_device_is_almost_surely_los(self):
        sc = environment_scenario("urban")          # a=4.88, b=0.43
        assert los_probability(sc, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_suburban_at_100m(self):
        sc = environment_scenario("suburban")       # a=9.6, b=0.16
        expected = 1.0 / (1.0 + 9.6 * math.exp(-0.16 * (45.0 - 9.6)))
        assert los_probability(sc, 100.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.9678, abs=5e-4)

    def test_complement_and_monotonicity(self):
        sc = environment_scenario("dense")
        r = np.linspace(0.0, 5000.0, 200)
        p = los_probability(sc, r)
        assert np.all((p > 0) & (p < 1) | (r == 0))
        assert np.all(np.diff(p) <= 0)              # decreasing in r
        higher = los_probability(environment_scenario("dense", h=200.0), r)
        assert np.all(higher >= p)                  # increasing in h

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            los_probability(Scenario(), -1.0)


class TestTransmitPower:
    def test_zero_compensation_is_constant(self):
        sc = Scenario(eps_l=0.0)
        r = np.linspace(0.0, sc.r_c, 50)
        assert np.allclose(transmit_power(sc, r, "los"), sc.rho_l)

    def test_truncation_rule(self):
        # the returned power is min(rho * R^(alpha*eps), p_u): with the
        # default (maximum) compensation the cap binds exactly at the edge
        sc = Scenario()
        r = np.linspace(0.0, sc.r_c, 200)
        big_r = np.hypot(r, sc.h)
        raw = sc.rho_l * big_r ** (sc.alpha_l * sc.eps_l)
        assert np.allclose(transmit_power(sc, r, "los"),
                           np.minimum(raw, sc.p_u))

    def test_monotone_and_capped(self):
        sc = Scenario()
        r = np.linspace(0.0, sc.r_c, 100)
        for link in ("los", "nlos"):
            p = transmit_power(sc, r, link)
            assert np.all(np.diff(p) >= -1e-15)
            assert np.all(p <= sc.p_u + 1e-15)

    def test_full_default_inversion_meets_budget_at_edge(self):
        sc = Scenario()
        assert transmit_power(sc, sc.r_c, "los") == pytest.approx(sc.p_u)

    def test_domain_errors(self):
        sc = Scenario()
        with pytest.raises(ValueError):
            transmit_power(sc, sc.r_c + 1.0, "los")
        with pytest.raises(ValueError):
            transmit_power(sc, 10.0, "sideways")


class TestFading:
    def test_m1_is_unit_exponential(self):
        rng = np.random.default_rng(0)
        x = sample_fading(1, rng, size=200_000)
        ks = stats.kstest(x, "expon")
        assert ks.pvalue > 0.01

    def test_mean_and_variance_m3(self):
        rng = np.random.default_rng(1)
        x = sample_fading(3, rng, size=1_000_000)
        assert x.mean() == pytest.approx(1.0, abs=5e-3)
        assert x.var() == pytest.approx(1.0 / 3.0, rel=0.02)

    def test_invalid_shape_rejected(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError):
            sample_fading(0, rng)
        with pytest.raises(ValueError):
            sample_fading(1.5, rng)


class TestTransmitPowerLaw:
    def test_total_mass_is_one(self):
        law = transmit_power_pdf(Scenario())
        assert law.total_mass() == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_zero_compensation(self):
        law = transmit_power_pdf(Scenario(eps_l=0.0, eps_n=0.0))
        assert law.rho_atom("los") + law.rho_atom("nlos") == pytest.approx(1.0, abs=1e-9)
        assert law.density(5e-3, "los") == 0.0

    def test_density_matches_sampled_histogram(self):
        """Monte-Carlo oracle: histogram of transmit_power over sampled
        (r, link) draws vs the change-of-variables density + atom."""
        sc = Scenario(eps_l=0.35, eps_n=0.2)   # partial compensation, no atom edge cases
        law = transmit_power_pdf(sc)
        rng = np.random.default_rng(7)
        n = 1_000_000
        r = sc.r_c * np.sqrt(rng.random(n))
        is_los = rng.random(n) < los_probability(sc, r)
        p = np.where(is_los,
                     transmit_power(sc, r, "los"),
                     transmit_power(sc, r, "nlos"))
        # CDF comparison on a grid (sup-norm <= 0.02 per the histogram contract)
        from scipy.integrate import quad
        grid = np.linspace(p.min(), sc.p_u * 0.999, 25)
        for q in grid:
            emp = (p <= q).mean()
            ana = 0.0
            for link in ("los", "nlos"):
                lo = min(transmit_power(sc, 0.0, link), q)
                val, _ = quad(lambda x: float(law.density(x, link)), lo, q,
                              limit=200)
                ana += val
            assert abs(emp - ana) <= 0.02

    def test_atom_is_boundary_only_within_budget(self):
        # with eps at (or below) the power-budget bound, the untruncated
        # power exceeds p_u on a null set, so the cap atom has zero mass
        law = transmit_power_pdf(Scenario())
        assert law.atom("los") == pytest.approx(0.0, abs=1e-12)
        assert law.atom("nlos") == pytest.approx(0.0, abs=1e-12)
