"""Air-to-ground channel: LoS probability, truncated fractional power
control, Nakagami fading sampling and the transmit-power distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

DEG = 180.0 / np.pi


def los_probability(scenario: Scenario, r) -> np.ndarray | float:
    """Probability of a LoS link at horizontal distance ``r`` from the UAV.

    Logistic in the elevation angle: 1 / (1 + a*exp(-b*(angle_deg - a))).
    ``r`` may be a scalar or an array; r = 0 maps to a 90 deg elevation.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("horizontal distance must be nonnegative")
    angle = DEG * np.arctan2(scenario.h, r)
    p = 1.0 / (1.0 + scenario.a * np.exp(-scenario.b * (angle - scenario.a)))
    return p if p.ndim else float(p)


def link_params(scenario: Scenario, link: str) -> tuple[float, float, int, float, float]:
    """(rho, alpha, m, eta, eps) for 'los' or 'nlos'."""
    if link == "los":
        return (scenario.rho_l, scenario.alpha_l, scenario.m_l,
                scenario.eta_l, scenario.eps_l)
    if link == "nlos":
        return (scenario.rho_n, scenario.alpha_n, scenario.m_n,
                scenario.eta_n, scenario.eps_n)
    raise ValueError(f"link must be 'los' or 'nlos', got {link!r}")


def transmit_power(scenario: Scenario, r, link: str) -> np.ndarray | float:
    """Truncated fractional path-loss inversion: min(rho * R^(alpha*eps), p_u)
    with R the Euclidean distance sqrt(r^2 + h^2)."""
    rho, alpha, _, _, eps = link_params(scenario, link)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > scenario.r_c):
        raise ValueError("serving distance outside [0, r_c]")
    big_r = np.hypot(r, scenario.h)
    p = np.minimum(rho * big_r ** (alpha * eps), scenario.p_u)
    return p if p.ndim else float(p)


def sample_fading(m: int, rng: np.random.Generator, size=None) -> np.ndarray | float:
    """Nakagami-m power gain: Gamma(shape=m, scale=1/m), unit mean."""
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"fading shape must be an integer >= 1, got {m!r}")
    return rng.gamma(shape=m, scale=1.0 / m, size=size)


@dataclass(frozen=True)
class TransmitPowerLaw:
    """Distribution of the transmit power of an active device, split by the
    link type it holds towards its own cluster UAV.

    The continuous part lives on (rho*h^(alpha*eps), p_u); devices whose
    inversion power would exceed the budget transmit at p_u, contributing an
    atom there.  Each link's branch carries the LoS/NLoS occurrence weight,
    so the two branches together have total mass 1.
    """

    scenario: Scenario

    def density(self, p, link: str) -> np.ndarray | float:
        """Continuous density f_{p_t}(p) for the given own-link type.

        Change of variables through r(p) = sqrt((p/rho)^(2/(eps*alpha)) - h^2)
        applied to the in-disk radial density 2r/r_c^2 weighted by the
        LoS/NLoS occurrence probability at r.
        """
        sc = self.scenario
        rho, alpha, _, _, eps = link_params(sc, link)
        p = np.asarray(p, dtype=float)
        if eps == 0.0:
            # degenerate power control: pure atom at rho, no density
            return np.zeros_like(p) if p.ndim else 0.0
        k = eps * alpha
        big_r = (p / rho) ** (1.0 / k)
        r2 = big_r**2 - sc.h**2
        valid = (r2 > 0.0) & (big_r <= np.hypot(sc.r_c, sc.h)) & (p < sc.p_u)
        r = np.sqrt(np.where(valid, r2, 1.0))
        w = los_probability(sc, r) if link == "los" else 1.0 - los_probability(sc, r)
        # f_p(p) = (2 r / r_c^2) w(r) dr/dp with r dr = R dR and
        # dR/dp = R^(1-k) / (k rho), hence f_p = 2 w R^(2-k) / (r_c^2 k rho)
        out = np.where(valid, 2.0 * w * big_r ** (2.0 - k) / (sc.r_c**2 * k * rho), 0.0)
        return out if out.ndim else float(out)

    def atom(self, link: str) -> float:
        """Mass at p = p_u: probability the untruncated power exceeds p_u."""
        sc = self.scenario
        rho, alpha, _, _, eps = link_params(sc, link)
        if eps == 0.0:
            return 0.0
        k = eps * alpha
        big_r_cut = (sc.p_u / rho) ** (1.0 / k)
        r2 = big_r_cut**2 - sc.h**2
        if r2 <= 0.0:
            r_cut = 0.0
        else:
            r_cut = min(np.sqrt(r2), sc.r_c)
        # mass of devices beyond r_cut, weighted by the link occurrence prob
        from scipy.integrate import quad
        if link == "los":
            w = lambda r: los_probability(sc, r)
        else:
            w = lambda r: 1.0 - los_probability(sc, r)
        val, _ = quad(lambda r: 2.0 * r / sc.r_c**2 * w(r), r_cut, sc.r_c)
        return val

    def rho_atom(self, link: str) -> float:
        """Mass at p = rho when eps = 0 (no compensation)."""
        sc = self.scenario
        _, _, _, _, eps = link_params(sc, link)
        if eps != 0.0:
            return 0.0
        from scipy.integrate import quad
        if link == "los":
            w = lambda r: los_probability(sc, r)
        else:
            w = lambda r: 1.0 - los_probability(sc, r)
        val, _ = quad(lambda r: 2.0 * r / sc.r_c**2 * w(r), 0.0, sc.r_c)
        return val

    def total_mass(self) -> float:
        from scipy.integrate import quad
        total = 0.0
        for link in ("los", "nlos"):
            rho, alpha, _, _, eps = link_params(self.scenario, link)
            if eps == 0.0:
                total += self.rho_atom(link)
                continue
            lo = rho * self.scenario.h ** (alpha * eps)
            cont, _ = quad(lambda p: float(self.density(p, link)),
                           lo, self.scenario.p_u, limit=200)
            total += cont + self.atom(link)
        return total


def transmit_power_pdf(scenario: Scenario) -> TransmitPowerLaw:
    return TransmitPowerLaw(scenario)
