"""Analytical SINR core: conditional success probability, interference
Laplace functional, success-probability moments and the beta-approximated
meta distribution.

The interference field is the displaced/thinned cluster process, which is a
plane PPP of density pi_bar * lambda_u.  Each interferer carries two marks:
the link type towards its own UAV (sets its transmit power through the
distance-dependent inversion) and the link type towards the typical UAV
(sets fading shape, additional loss and path-loss exponent).  The Laplace
functional factorizes over the four mark combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, comb

from .channel import link_params, los_probability
from .scenario import Scenario

Z_FAR = 1e9        # outer edge of the numeric interference integral, m
_LINKS = ("los", "nlos")


class QuadratureError(RuntimeError):
    """Interference quadrature failed to converge within the refinement
    budget; carries the achieved absolute tolerance on the exponent."""

    def __init__(self, achieved: float, target: float):
        super().__init__(
            f"interference quadrature reached |delta|={achieved:.3e} "
            f"(target {target:.3e})")
        self.achieved = achieved
        self.target = target


def beta2(m: int) -> float:
    """Alzer's tightness constant (m!)^(-1/m) for the Nakagami CCDF bound."""
    return math.factorial(m) ** (-1.0 / m)


def fading_weight(scenario: Scenario, link: str, k, r) -> np.ndarray:
    """Exponent coefficient g_k for the k-th term of the alternating sum,
    evaluated at Euclidean serving distance R = sqrt(r^2 + h^2)."""
    rho, alpha, m, eta, eps = link_params(scenario, link)
    k = np.asarray(k, dtype=float)
    r = np.asarray(r, dtype=float)
    big_r = np.hypot(r, scenario.h)
    return k * beta2(m) * m * scenario.theta * big_r ** ((1.0 - eps) * alpha) / (rho * eta)


def _gauss_legendre(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


@dataclass(frozen=True)
class _Grid:
    """Quadrature nodes shared by all four (c1, c2) interference factors."""
    z: np.ndarray          # Euclidean interferer distances, log-spaced GL
    wz: np.ndarray         # z-weights including the log-map Jacobian
    p_of_s: dict           # link -> transmit powers at the s-nodes
    ws: dict               # link -> occurrence-weighted radial s-weights
    pz_typ: dict           # link -> P_link at horizontal dist of z-nodes
    far_pw: dict           # (c1, c2) -> far-tail constant eta*E[w p]*P_c1(inf)
    z_far: float           # outer edge of the numeric z-integral


@lru_cache(maxsize=32)
def _build_grid(scenario: Scenario, n_z: int, n_s: int, z_far: float = Z_FAR) -> _Grid:
    h = scenario.h
    v, wv = _gauss_legendre(n_z, 0.0, math.log(z_far / h))
    z = h * np.exp(v)
    wz = wv * z  # dz = z dv

    s, ws_raw = _gauss_legendre(n_s, 0.0, scenario.r_c)
    pl_s = los_probability(scenario, s)
    radial = 2.0 * s / scenario.r_c**2
    ws = {"los": ws_raw * radial * pl_s, "nlos": ws_raw * radial * (1.0 - pl_s)}

    p_of_s = {}
    for link in _LINKS:
        rho, alpha, _, _, eps = link_params(scenario, link)
        p_of_s[link] = np.minimum(rho * np.hypot(s, h) ** (alpha * eps), scenario.p_u)

    horiz = np.sqrt(np.maximum(z**2 - h**2, 0.0))
    pl_z = los_probability(scenario, horiz)
    pz_typ = {"los": pl_z, "nlos": 1.0 - pl_z}

    p_inf_los = 1.0 / (1.0 + scenario.a * math.exp(scenario.a * scenario.b))
    p_inf = {"los": p_inf_los, "nlos": 1.0 - p_inf_los}
    far_pw = {}
    for c1 in _LINKS:
        _, _, _, eta1, _ = link_params(scenario, c1)
        for c2 in _LINKS:
            far_pw[(c1, c2)] = eta1 * float(ws[c2] @ p_of_s[c2]) * p_inf[c1]
    return _Grid(z=z, wz=wz, p_of_s=p_of_s, ws=ws, pz_typ=pz_typ, far_pw=far_pw,
                 z_far=z_far)


@lru_cache(maxsize=8)
def _grids(scenario: Scenario) -> tuple[_Grid, _Grid]:
    """(coarse, fine) node sets; the pair difference is the error estimate."""
    return _build_grid(scenario, 128, 32), _build_grid(scenario, 256, 64)


def _exponents(scenario: Scenario, grid: _Grid, g: np.ndarray) -> np.ndarray:
    """Interference-integral exponents (without 2*pi*pi_bar*lambda_u).

    ``g`` has shape (B, N): N evaluation points, each a product of B fading
    weights (B = 1 for the success probability, 2 for the second moment).
    Returns shape (N,).
    """
    out = np.zeros(g.shape[1])
    g_sum = g.sum(axis=0)
    for c1 in _LINKS:
        _, alpha1, m1, eta1, _ = link_params(scenario, c1)
        zfac = grid.wz * grid.z * grid.pz_typ[c1]            # (Z,)
        z_pow = grid.z ** (-alpha1)                          # (Z,)
        for c2 in _LINKS:
            p = grid.p_of_s[c2]                              # (S,)
            ws = grid.ws[c2]                                 # (S,)
            # kappa product over the B fading weights, chunked over N
            for lo in range(0, g.shape[1], 64):
                gs = g[:, lo:lo + 64]                        # (B, n)
                x = (gs[..., None, None] * eta1 * p[:, None] * z_pow)  # (B,n,S,Z)
                kappa = np.prod((1.0 + x / m1) ** (-m1), axis=0)       # (n,S,Z)
                inner = np.einsum("s,nsz->nz", ws, 1.0 - kappa)        # (n,Z)
                out[lo:lo + 64] += inner @ zfac
            # first-order analytic tail beyond Z_FAR
            out += g_sum * grid.far_pw[(c1, c2)] * grid.z_far ** (2.0 - alpha1) / (alpha1 - 2.0)
    return out


def _laplace_exponents(scenario: Scenario, pi_bar: float, g: np.ndarray,
                       tol: float = 5e-6) -> np.ndarray:
    """Full Laplace exponents 2*pi*pi_bar*lambda_u * sum of the four
    factors, with a coarse/fine refinement check."""
    coarse, fine = _grids(scenario)
    scale = 2.0 * math.pi * pi_bar * scenario.lambda_u
    e_fine = scale * _exponents(scenario, fine, g)
    e_coarse = scale * _exponents(scenario, coarse, g)
    # error criterion on the resulting probability: |exp(-a) - exp(-b)|
    err = float(np.max(np.abs(np.exp(-e_fine) - np.exp(-e_coarse))))
    if err > tol:
        finer = _build_grid(scenario, 512, 128)
        e_finer = scale * _exponents(scenario, finer, g)
        err = float(np.max(np.abs(np.exp(-e_finer) - np.exp(-e_fine))))
        if err > tol:
            raise QuadratureError(err, tol)
        return e_finer
    return e_fine


def laplace_product(scenario: Scenario, pi_bar: float, g_values) -> float:
    """Joint interference Laplace functional E[exp(-(g_1+...+g_b) I)] for
    b in {1, 2} positive fading weights (interference part only; the caller
    applies the noise factor)."""
    g = np.atleast_1d(np.asarray(g_values, dtype=float))
    if g.ndim != 1 or g.size not in (1, 2):
        raise ValueError("g_values must hold one or two weights")
    if np.any(g <= 0.0):
        raise ValueError("fading weights must be positive")
    if not 0.0 <= pi_bar <= 1.0:
        raise ValueError("pi_bar must be in [0, 1]")
    if pi_bar == 0.0:
        return 1.0
    e = _laplace_exponents(scenario, pi_bar, g.reshape(-1, 1))
    return float(np.exp(-e[0]))


def conditional_success_curve(scenario: Scenario, pi_bar: float,
                              r, link: str) -> np.ndarray:
    """Success probability conditioned on serving distance and link type,
    vectorized over ``r``.  The LoS/NLoS occurrence prefactor is *not*
    applied here (callers weight by it)."""
    if not 0.0 <= pi_bar <= 1.0:
        raise ValueError("pi_bar must be in [0, 1]")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0) or np.any(r > scenario.r_c):
        raise ValueError("serving distance outside [0, r_c]")
    _, _, m, _, _ = link_params(scenario, link)
    ks = np.arange(1, m + 1)
    g = fading_weight(scenario, link, ks[:, None], r[None, :])   # (K, R)
    flat = g.reshape(1, -1)
    if pi_bar > 0.0:
        lap = np.exp(-_laplace_exponents(scenario, pi_bar, flat)).reshape(m, r.size)
    else:
        lap = np.ones((m, r.size))
    noise = np.exp(-g * scenario.sigma2)
    coeff = (comb(m, ks) * (-1.0) ** (ks + 1))[:, None]
    ps = np.sum(coeff * noise * lap, axis=0)
    return np.clip(ps, 0.0, 1.0)


def conditional_success(scenario: Scenario, pi_bar: float, r: float, link: str) -> float:
    return float(conditional_success_curve(scenario, pi_bar, [r], link)[0])


@dataclass(frozen=True)
class Moments:
    """First two moments of the conditional success probability."""
    m1: float
    m2: float
    pi_bar: float

    def __post_init__(self):
        if not (0.0 <= self.m1 <= 1.0 and self.m1**2 <= self.m2 <= self.m1 + 1e-12):
            raise ValueError(f"inconsistent moments m1={self.m1}, m2={self.m2}")


def moments(scenario: Scenario, pi_bar: float, n_r: int = 48) -> Moments:
    """Moments M_1, M_2 of the conditional success probability, averaging
    the per-link alternating sums over the serving distance with the
    LoS/NLoS occurrence split."""
    if not 0.0 <= pi_bar <= 1.0:
        raise ValueError("pi_bar must be in [0, 1]")
    r, wr = _gauss_legendre(n_r, 0.0, scenario.r_c)
    radial = 2.0 * r / scenario.r_c**2
    pl = los_probability(scenario, r)
    occ = {"los": pl, "nlos": 1.0 - pl}

    m1 = 0.0
    m2 = 0.0
    for link in _LINKS:
        _, _, m, _, _ = link_params(scenario, link)
        ks = np.arange(1, m + 1)
        g = fading_weight(scenario, link, ks[:, None], r[None, :])   # (K, R)
        w_outer = wr * radial * occ[link]

        # first moment: single alternating sum
        if pi_bar > 0.0:
            lap1 = np.exp(-_laplace_exponents(scenario, pi_bar, g.reshape(1, -1))
                          ).reshape(m, r.size)
        else:
            lap1 = np.ones((m, r.size))
        c1 = comb(m, ks) * (-1.0) ** (ks + 1)
        term1 = np.sum(c1[:, None] * np.exp(-g * scenario.sigma2) * lap1, axis=0)
        m1 += float(w_outer @ term1)

        # second moment: double sum over (k1, k2) with the joint functional
        k1 = np.repeat(ks, m)
        k2 = np.tile(ks, m)
        g1 = fading_weight(scenario, link, k1[:, None], r[None, :])  # (K2, R)
        g2 = fading_weight(scenario, link, k2[:, None], r[None, :])
        pair = np.stack([g1.ravel(), g2.ravel()])                    # (2, K2*R)
        if pi_bar > 0.0:
            lap2 = np.exp(-_laplace_exponents(scenario, pi_bar, pair)
                          ).reshape(m * m, r.size)
        else:
            lap2 = np.ones((m * m, r.size))
        c2 = comb(m, k1) * comb(m, k2) * (-1.0) ** (k1 + k2)
        term2 = np.sum(c2[:, None] * np.exp(-(g1 + g2) * scenario.sigma2) * lap2, axis=0)
        m2 += float(w_outer @ term2)

    # alternating-sum + quadrature residue can nudge the moments outside the
    # feasible set of a [0,1] random variable; project back
    m1 = min(max(m1, 0.0), 1.0)
    m2 = min(max(m2, m1**2), m1)
    return Moments(m1=m1, m2=m2, pi_bar=pi_bar)


DEGENERATE_VARIANCE = 1e-10


def meta_distribution(mom: Moments, gamma: float) -> float:
    """Beta-approximated CCDF of the conditional success probability."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    var = mom.m2 - mom.m1**2
    if var < DEGENERATE_VARIANCE:
        return 1.0 if gamma < mom.m1 else 0.0
    if gamma == 0.0:
        return 1.0
    if gamma == 1.0:
        return 0.0
    alpha = mom.m1 * (mom.m1 - mom.m2) / var
    beta = (mom.m1 - mom.m2) * (1.0 - mom.m1) / var
    return float(1.0 - betainc(alpha, beta, gamma))


def meta_distribution_curve(mom: Moments, gamma: np.ndarray) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    var = mom.m2 - mom.m1**2
    if var < DEGENERATE_VARIANCE:
        return np.where(gamma < mom.m1, 1.0, 0.0)
    alpha = mom.m1 * (mom.m1 - mom.m2) / var
    beta = (mom.m1 - mom.m2) * (1.0 - mom.m1) / var
    out = 1.0 - betainc(alpha, beta, np.clip(gamma, 0.0, 1.0))
    return np.where(gamma <= 0.0, 1.0, np.where(gamma >= 1.0, 0.0, out))


@dataclass(frozen=True)
class SuccessLaw:
    """Conditional success probability as a function of the serving
    distance and link type, plus the activity probability it was solved at."""

    scenario: Scenario
    mean_activity: float

    def p_success(self, r, link: str) -> np.ndarray | float:
        out = conditional_success_curve(self.scenario, self.mean_activity, r, link)
        return out if np.ndim(r) else float(out[0])
