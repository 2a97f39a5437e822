import math

import pytest
from hypothesis import given, strategies as st

from paoi_lab.scenario import (ENVIRONMENTS, Scenario, ScenarioError,
                               environment_scenario, max_compensation)


def test_default_table_parameters():
    sc = Scenario()
    assert sc.lambda_u == 1e-6          # 1 km^-2 in m^-2
    assert sc.r_c == 120.0
    assert sc.h == 100.0
    assert sc.p_u == 0.1
    assert sc.rho_l == 1e-3
    assert sc.sigma2 == 1e-9
    assert sc.theta == 1.0
    assert (sc.alpha_l, sc.alpha_n) == (2.1, 4.0)
    assert (sc.m_l, sc.m_n) == (3, 1)
    assert (sc.eta_l, sc.eta_n) == (1.0, 0.01)


def test_environment_table():
    assert ENVIRONMENTS["suburban"] == (9.6, 0.16)
    assert ENVIRONMENTS["urban"] == (4.88, 0.43)
    assert ENVIRONMENTS["dense"] == (12.0, 0.11)
    assert ENVIRONMENTS["highrise"] == (27.0, 0.08)
    sc = environment_scenario("urban")
    assert (sc.a, sc.b) == (4.88, 0.43)


def test_unknown_environment_rejected():
    with pytest.raises(ScenarioError):
        environment_scenario("atlantis")


def test_eps_defaults_to_power_budget_maximum():
    sc = Scenario()
    d_max = math.hypot(sc.r_c, sc.h)
    # at the cluster edge the inversion power exactly meets the budget
    assert sc.rho_l * d_max ** (sc.alpha_l * sc.eps_l) == pytest.approx(sc.p_u)
    assert sc.rho_n * d_max ** (sc.alpha_n * sc.eps_n) == pytest.approx(sc.p_u)
    assert sc.eps_l == pytest.approx(
        max_compensation(sc.alpha_l, sc.rho_l, sc.p_u, sc.r_c, sc.h))


def test_eps_above_budget_rejected():
    hi = max_compensation(2.1, 1e-3, 0.1, 120.0, 100.0)
    with pytest.raises(ScenarioError):
        Scenario(eps_l=hi * 1.5)
    Scenario(eps_l=hi * 0.5)  # partial compensation is fine


@pytest.mark.parametrize("field,value", [
    ("lambda_a", -0.1), ("lambda_a", 1.1), ("n_d", 0), ("m_l", 0),
    ("r_c", 0.0), ("sigma2", -1.0), ("theta", 0.0),
])
def test_invariant_violations(field, value):
    with pytest.raises(ScenarioError):
        Scenario(**{field: value})


def test_with_revalidates():
    sc = Scenario()
    assert sc.with_(lambda_a=0.2).lambda_a == 0.2
    with pytest.raises(ScenarioError):
        sc.with_(lambda_a=2.0)


@given(st.floats(min_value=0.0, max_value=1.0),
       st.integers(min_value=1, max_value=30))
def test_traffic_ranges_accepted(lam, n_d):
    sc = Scenario(lambda_a=lam, n_d=n_d)
    assert 0.0 <= sc.lambda_a <= 1.0
    assert sc.n_d >= 1
