import pytest
from hypothesis import given, settings, strategies as st

from paoi_lab.activity import (ActivitySolution, conditional_activity,
                               solve_mean_activity)
from paoi_lab.scenario import Scenario, environment_scenario
from paoi_lab.sinr import Moments


class TestConditionalActivity:
    def test_lm1_single_device(self):
        sc = Scenario(n_d=1, lambda_a=0.5)
        assert conditional_activity(1, sc, 0.8) == pytest.approx(0.5 / 1.3)

    def test_lm1_two_devices(self):
        sc = Scenario(n_d=2, lambda_a=0.5)
        assert conditional_activity(1, sc, 0.8) == pytest.approx(1.0 / 1.8)

    def test_lm1_zero_load(self):
        sc = Scenario(lambda_a=0.0)
        assert conditional_activity(1, sc, 0.5) == 0.0
        with pytest.raises(ValueError):
            conditional_activity(1, sc, 0.0)

    def test_lm2_saturated(self):
        sc = Scenario(lambda_a=1.0, n_d=3)
        assert conditional_activity(2, sc, 1.0) == 1.0
        assert conditional_activity(2, sc, 0.3) == 1.0

    def test_lm2_formula(self):
        sc = Scenario(lambda_a=0.5, n_d=2)
        lam2 = 1.0 - 0.5**2
        p = 0.8
        assert conditional_activity(2, sc, p) == pytest.approx(p * lam2 + (1 - p))

    def test_lm2_failed_slot_stays_busy(self):
        sc = Scenario(lambda_a=0.2)
        assert conditional_activity(2, sc, 0.0) == 1.0

    def test_invalid_inputs(self):
        sc = Scenario()
        with pytest.raises(ValueError):
            conditional_activity(3, sc, 0.5)
        with pytest.raises(ValueError):
            conditional_activity(1, sc, 1.5)

    @given(st.floats(min_value=0.01, max_value=1.0),
           st.floats(min_value=0.0, max_value=1.0),
           st.integers(min_value=1, max_value=20))
    @settings(max_examples=50, deadline=None)
    def test_range_property(self, lam, p_s, n_d):
        sc = Scenario(lambda_a=lam, n_d=n_d)
        for lm in (1, 2):
            assert 0.0 <= conditional_activity(lm, sc, p_s) <= 1.0


class TestSolveMeanActivity:
    def test_lm1_zero_load_corner(self):
        sol = solve_mean_activity(1, environment_scenario("urban", lambda_a=0.0))
        assert sol.pi_bar == 0.0
        assert sol.iterations == 0

    def test_lm2_saturated_corner(self):
        sol = solve_mean_activity(2, environment_scenario("urban", lambda_a=1.0))
        assert sol.pi_bar == 1.0

    def test_residual_within_tolerance(self):
        sol = solve_mean_activity(1, environment_scenario("urban", lambda_a=0.5))
        assert sol.residual <= 1e-6
        assert 0.0 < sol.pi_bar < 1.0
        assert sol.moments.pi_bar == sol.pi_bar

    def test_monotone_in_arrival_rate(self):
        sc = environment_scenario("urban")
        pis = [solve_mean_activity(1, sc.with_(lambda_a=lam)).pi_bar
               for lam in (0.2, 0.5, 1.0)]
        assert pis[0] < pis[1] < pis[2]

    def test_lm2_dominates_lm1_at_high_load(self):
        # under the time split a failed slot keeps the device busy, so at
        # high load the mean activity exceeds the bandwidth-split value
        sc = environment_scenario("dense", lambda_a=0.8)
        pi1 = solve_mean_activity(1, sc).pi_bar
        pi2 = solve_mean_activity(2, sc).pi_bar
        assert pi2 > pi1

    def test_lm1_strictly_below_one(self):
        sc = environment_scenario("highrise", lambda_a=1.0)
        sol = solve_mean_activity(1, sc)
        assert sol.pi_bar < 1.0

    def test_argument_validation(self):
        sc = Scenario()
        with pytest.raises(ValueError):
            solve_mean_activity(1, sc, tol=0.0)
        with pytest.raises(ValueError):
            solve_mean_activity(1, sc, max_iter=0)
        with pytest.raises(ValueError):
            solve_mean_activity(0, sc)


def test_solution_range_check():
    mom = Moments(m1=0.5, m2=0.3, pi_bar=0.5)
    with pytest.raises(ValueError):
        ActivitySolution(pi_bar=1.5, iterations=1, residual=0.0,
                         load_model=1, moments=mom)
