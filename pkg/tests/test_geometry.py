import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from paoi_lab.geometry import sample_topology, serving_distance_pdf
from paoi_lab.scenario import Scenario


def test_zero_density_has_no_interferers():
    sc = Scenario(lambda_u=1e-30)
    topo = sample_topology(sc, 10_000.0, seed=0)
    assert topo.n_interferers == 0


def test_device_count_and_ranges():
    sc = Scenario(n_d=5)
    topo = sample_topology(sc, 10_000.0, seed=3)
    assert topo.typical_devices.shape == (5,)
    assert np.all((topo.typical_devices >= 0) & (topo.typical_devices <= sc.r_c))
    assert np.all(topo.interferers[:, 1] <= sc.r_c)
    assert np.all(topo.interferers >= 0)


def test_cluster_count_is_poisson():
    sc = Scenario()                       # lambda_u = 1 km^-2
    window = 10_000.0
    mean = sc.lambda_u * np.pi * window**2
    assert mean == pytest.approx(np.pi * 100.0)
    counts = np.array([sample_topology(sc, window, seed=s).n_interferers
                       for s in range(400)])
    # sample mean within 4 sigma of the Poisson mean
    assert abs(counts.mean() - mean) < 4.0 * np.sqrt(mean / counts.size)
    assert counts.var() == pytest.approx(mean, rel=0.25)


def test_radial_cdf_kolmogorov_smirnov():
    sc = Scenario(n_d=500)
    samples = np.concatenate([
        sample_topology(sc, 2000.0, seed=s).typical_devices
        for s in range(200)])          # 10^5 sampled device distances
    ks = stats.kstest(samples, lambda r: (r / sc.r_c) ** 2)
    assert ks.pvalue > 0.01


def test_determinism():
    sc = Scenario(n_d=3)
    a = sample_topology(sc, 5000.0, seed=42)
    b = sample_topology(sc, 5000.0, seed=42)
    assert np.array_equal(a.typical_devices, b.typical_devices)
    assert np.array_equal(a.interferers, b.interferers)


def test_window_validation():
    sc = Scenario()
    with pytest.raises(ValueError):
        sample_topology(sc, sc.r_c, seed=0)


class TestServingDistancePdf:
    def test_endpoints(self):
        sc = Scenario()
        assert serving_distance_pdf(sc, 0.0) == 0.0
        assert serving_distance_pdf(sc, sc.r_c) == pytest.approx(2.0 / sc.r_c)
        assert serving_distance_pdf(sc, sc.r_c) == pytest.approx(0.016667, abs=1e-5)

    def test_normalization(self):
        sc = Scenario()
        val, _ = quad(lambda r: serving_distance_pdf(sc, r), 0.0, sc.r_c)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_domain(self):
        sc = Scenario()
        with pytest.raises(ValueError):
            serving_distance_pdf(sc, -1.0)
        with pytest.raises(ValueError):
            serving_distance_pdf(sc, sc.r_c + 1.0)
