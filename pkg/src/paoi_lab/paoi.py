"""Peak age of information (PAoI) of the slotted uplink: per-device
distributions and mean PAoI under both load models, for correlated and
uncorrelated devices.

Units are slots of length T (scenario.t_slot).  Two per-device building
blocks recur throughout:

* Load model 1 (bandwidth split): an update cycle is T_i + T_tra with
  T_i ~ Geometric(lambda_a) on {1,2,...} and T_tra = N_d * Geometric(p_s)
  (each attempt occupies N_d slots), so the cycle length Delta_o has
  support {N_d+1, N_d+2, ...}.
* Load model 2 (time split): attempts happen once per length-N_d polling
  cycle, T_tra = 1 + N_d*(K-1) with K ~ Geometric(p_s), so the waiting-free
  cycle Delta' = T_i + T_tra has support {2, 3, ...}; the periodic-schedule
  waiting time is accounted separately through X_n.

Success probabilities entering these queues are per-attempt values with the
LoS/NLoS state marginalized at each distance: a fixed NLoS draw can never
close the link under the default power budget, which would make every
distance-averaged mean infinite, while per-attempt link states keep the
model consistent with finite observed means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import los_probability
from .scenario import Scenario

# success probabilities below this would need >1e9-slot cycles; the mean is
# reported as infinite rather than numerically astronomical
P_FLOOR = 1e-9
_TAIL_TOL = 1e-12


def _check(p_s: float, lambda_a: float, n_d: int, n: int, p_s_open: bool = True) -> None:
    lo_ok = p_s > 0.0 if p_s_open else p_s >= 0.0
    if not (lo_ok and p_s <= 1.0):
        raise ValueError(f"p_s out of range: {p_s!r}")
    if not 0.0 < lambda_a <= 1.0:
        raise ValueError(f"lambda_a out of range: {lambda_a!r}")
    if not (isinstance(n_d, (int, np.integer)) and n_d >= 1):
        raise ValueError(f"n_d must be a positive integer, got {n_d!r}")
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")


def paoi_pmf_lm1(p_s: float, lambda_a: float, n_d: int, n: int) -> float:
    """P(Delta_o = n) under load model 1: sum over attempt counts n2 >= 1
    with interarrival n1 = n - n2*N_d >= 1."""
    _check(p_s, lambda_a, n_d, n)
    q, u = 1.0 - lambda_a, 1.0 - p_s
    total = 0.0
    for n2 in range(1, (n - 1) // n_d + 1):
        n1 = n - n2 * n_d
        total += lambda_a * p_s * q ** (n1 - 1) * u ** (n2 - 1)
    return total


def paoi_ccdf_lm1(p_s: float, lambda_a: float, n_d: int, n: int) -> float:
    """P(Delta_o > n) under load model 1, with the geometric attempt tail
    summed analytically."""
    _check(p_s, lambda_a, n_d, n)
    q, u = 1.0 - lambda_a, 1.0 - p_s
    k0 = max((n - 1) // n_d, 0)
    total = u ** k0
    for k in range(1, k0 + 1):
        total += p_s * u ** (k - 1) * q ** (n - n_d * k)
    return total


def delta_prime_pmf_lm2(p_s: float, lambda_a: float, n_d: int, n: int) -> float:
    """P(Delta' = n) under load model 2 (waiting-free cycle)."""
    _check(p_s, lambda_a, n_d, n)
    if n < 2:
        return 0.0
    q, u = 1.0 - lambda_a, 1.0 - p_s
    total = 0.0
    for n1 in range((n - 2) // n_d + 1):
        total += lambda_a * p_s * q ** (n - 2 - n_d * n1) * u ** n1
    return total


def delta_prime_ccdf_lm2(p_s: float, lambda_a: float, n_d: int, n: int) -> float:
    """P(Delta' > n) under load model 2."""
    _check(p_s, lambda_a, n_d, n)
    if n < 2:
        return 1.0
    q, u = 1.0 - lambda_a, 1.0 - p_s
    f0 = (n - 2) // n_d
    total = u ** (f0 + 1)
    for f in range(f0 + 1):
        total += p_s * u ** f * q ** (n - 1 - n_d * f)
    return total


@dataclass(frozen=True)
class PaoiDistribution:
    """Finite PMF window of a per-device PAoI law plus the analytic mass of
    the geometric tail beyond ``tail_truncation``."""

    support_start: int
    pmf: np.ndarray           # mass at support_start, support_start+1, ...
    tail_truncation: int      # last n covered by `pmf`
    tail_mass: float          # P(Delta > tail_truncation), summed analytically

    def total_mass(self) -> float:
        return float(self.pmf.sum() + self.tail_mass)

    def mass_at(self, n: int) -> float:
        if n < self.support_start or n > self.tail_truncation:
            return 0.0
        return float(self.pmf[n - self.support_start])


def paoi_distribution(load_model: int, p_s: float, lambda_a: float, n_d: int,
                      tail_tol: float = _TAIL_TOL) -> PaoiDistribution:
    """Materialize the per-device PAoI PMF out to where the remaining mass
    drops below ``tail_tol``."""
    if load_model == 1:
        pmf_fn, ccdf_fn, start = paoi_pmf_lm1, paoi_ccdf_lm1, n_d + 1
    elif load_model == 2:
        pmf_fn, ccdf_fn, start = delta_prime_pmf_lm2, delta_prime_ccdf_lm2, 2
    else:
        raise ValueError(f"load_model must be 1 or 2, got {load_model!r}")
    if p_s < P_FLOOR:
        raise ValueError("success probability too small to materialize the PMF")
    n = start
    values = []
    while ccdf_fn(p_s, lambda_a, n_d, n - 1) > tail_tol or n == start:
        values.append(pmf_fn(p_s, lambda_a, n_d, n))
        n += 1
        if n - start > 10_000_000:
            raise RuntimeError("PMF window exceeded 1e7 slots")
    last = n - 1
    return PaoiDistribution(support_start=start, pmf=np.array(values),
                            tail_truncation=last,
                            tail_mass=ccdf_fn(p_s, lambda_a, n_d, last))


def waiting_time_xn(lambda_a: float, n_d: int) -> float:
    """Mean waiting time (slots) between an update's generation and the
    device's next periodic transmission slot under load model 2,
    conditioned on arrival within one polling cycle."""
    if not 0.0 < lambda_a <= 1.0:
        raise ValueError(f"lambda_a must be in (0, 1], got {lambda_a!r}")
    if not (isinstance(n_d, (int, np.integer)) and n_d >= 1):
        raise ValueError(f"n_d must be a positive integer, got {n_d!r}")
    q = 1.0 - lambda_a
    norm = 1.0 - q ** n_d
    xn = lambda x_k: q ** (x_k - 1) * lambda_a / norm
    total = sum(xn(k) * (n_d - k - 1) for k in range(1, n_d))
    total += xn(n_d) * (n_d - 1)
    return total


@dataclass(frozen=True)
class PaoiSummary:
    mean_paoi: float           # units of T
    load_model: int
    device_mode: str           # 'correlated' | 'uncorrelated' | 'single'
    n_d: int
    lambda_a: float
    method: str                # 'exact' | 'approx' | 'simulated'

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.mean_paoi)


def _distance_profile(success_law, scenario: Scenario, n_r: int = 48):
    """(weights, marginal per-attempt success) at Gauss-Legendre distance
    nodes; weights include the 2r/r_c^2 radial density and sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * scenario.r_c * (x + 1.0)
    wr = 0.5 * scenario.r_c * w * 2.0 * r / scenario.r_c**2
    wr = wr / wr.sum()   # the radial density integrates to 1 exactly
    pl = los_probability(scenario, r)
    ps_l = np.broadcast_to(np.asarray(success_law.p_success(r, "los"), dtype=float), r.shape)
    ps_n = np.broadcast_to(np.asarray(success_law.p_success(r, "nlos"), dtype=float), r.shape)
    ps = pl * ps_l + (1.0 - pl) * ps_n
    return wr, np.clip(ps, 0.0, 1.0)


def _fused_ccdf_sum(load_model: int, ps: np.ndarray, lambda_a: float,
                    n_d: int, power: int) -> np.ndarray:
    """sum_{n>=0} Fbar^power(n) per success-probability node, evaluated by
    incremental recursion with an analytic geometric tail.

    Fbar is the per-device CCDF of Delta_o (LM1) or Delta' (LM2); power is
    the number of fused devices (CCDF product of iid copies).
    """
    q, u = 1.0 - lambda_a, 1.0 - ps
    n_nodes = ps.size
    total = np.ones(n_nodes)            # n = 0 term
    s = np.zeros(n_nodes)               # geometric double-sum part of Fbar
    u_pow = np.ones(n_nodes)            # u^{k-1} for the next entering term
    tail_exp = np.zeros(n_nodes, dtype=int)
    block = np.zeros(n_nodes)
    prev_block = None
    ratio = u ** power
    n = 1
    while True:
        if load_model == 1:
            # Fbar(n) = sum_{k<=K0} p u^{k-1} q^{n-N_d k} + u^{K0}
            if n > 1:
                s *= q
            if n > n_d and (n - 1) % n_d == 0:
                # K0 increments at n = N_d+1, 2N_d+1, ...; new term has q^1
                s += ps * u_pow * q
                u_pow = u_pow * u
                tail_exp += 1
        else:
            # Fbar(n) = sum_{f<=F0} p u^f q^{n-1-N_d f} + u^{F0+1}
            if n == 2:
                s = ps * q
                tail_exp += 1
            elif n > 2:
                s *= q
                if (n - 2) % n_d == 0:
                    u_pow = u_pow * u
                    s += ps * u_pow * q
                    tail_exp += 1
        fbar = s + u ** tail_exp
        contrib = fbar ** power
        total += contrib
        block += contrib
        if n % n_d == 0:
            if np.all(contrib < _TAIL_TOL):
                break
            if prev_block is not None and np.all(block <= prev_block * np.maximum(ratio, 1e-300) * (1 + 1e-9)):
                # geometric regime reached: remaining tail per node
                with np.errstate(divide="ignore", invalid="ignore"):
                    rest = np.where(ratio < 1.0, block * ratio / (1.0 - ratio), 0.0)
                if np.all(rest < 1e-10 * np.maximum(total, 1.0)) or n > 200_000:
                    total += rest
                    break
            prev_block = block
            block = np.zeros(n_nodes)
        n += 1
        if n > 5_000_000:
            raise RuntimeError("fused CCDF series did not enter geometric regime")
    return total


def _summary(mean_slots: float, scenario: Scenario, load_model: int,
             device_mode: str, method: str) -> PaoiSummary:
    return PaoiSummary(mean_paoi=mean_slots * scenario.t_slot,
                       load_model=load_model, device_mode=device_mode,
                       n_d=scenario.n_d, lambda_a=scenario.lambda_a,
                       method=method)


def mean_paoi_single_device(success_law, scenario: Scenario) -> PaoiSummary:
    """Mean PAoI of an N_d = 1 cluster (identical under both load models):
    two transmission times plus one interarrival, E[2/P_s] + 1/lambda_a."""
    w, ps = _distance_profile(success_law, scenario)
    if scenario.lambda_a == 0.0 or np.any(ps < P_FLOOR):
        return _summary(math.inf, scenario, 1, "single", "exact")
    mean = float(np.sum(w * (2.0 / ps))) + 1.0 / scenario.lambda_a
    return _summary(mean, scenario, 1, "single", "exact")


def mean_paoi_uncorrelated_lm1(success_law, scenario: Scenario) -> PaoiSummary:
    """Uncorrelated devices, load model 1: E[2 N_d / P_s] + 1/lambda_a."""
    w, ps = _distance_profile(success_law, scenario)
    if scenario.lambda_a == 0.0 or np.any(ps < P_FLOOR):
        return _summary(math.inf, scenario, 1, "uncorrelated", "exact")
    mean = float(np.sum(w * (2.0 * scenario.n_d / ps))) + 1.0 / scenario.lambda_a
    return _summary(mean, scenario, 1, "uncorrelated", "exact")


def mean_paoi_correlated_lm1(success_law, scenario: Scenario) -> PaoiSummary:
    """Correlated devices, load model 1: all devices track one process and
    restart on any delivery, so the fused peak is the minimum of N_d iid
    cycles; mean = E_r[ sum_n Fbar^{N_d}(n) ]."""
    w, ps = _distance_profile(success_law, scenario)
    if scenario.lambda_a == 0.0 or np.any(ps < P_FLOOR):
        return _summary(math.inf, scenario, 1, "correlated", "exact")
    sums = _fused_ccdf_sum(1, ps, scenario.lambda_a, scenario.n_d, scenario.n_d)
    return _summary(float(np.sum(w * sums)), scenario, 1, "correlated", "exact")


def mean_paoi_correlated_lm1_approx(success_law, scenario: Scenario) -> PaoiSummary:
    """Modified-rate approximation: the cluster behaves like one device with
    arrival rate 1-(1-lambda_a)^{N_d} and per-cycle success 1-(1-P_s)^{N_d}."""
    w, ps = _distance_profile(success_law, scenario)
    lam_hat = 1.0 - (1.0 - scenario.lambda_a) ** scenario.n_d
    ps_hat = 1.0 - (1.0 - ps) ** scenario.n_d
    if lam_hat == 0.0 or np.any(ps_hat < P_FLOOR):
        return _summary(math.inf, scenario, 1, "correlated", "approx")
    mean = float(np.sum(w * (scenario.n_d / ps_hat))) + 1.0 / lam_hat
    return _summary(mean, scenario, 1, "correlated", "approx")


def mean_paoi_correlated_lm2(success_law, scenario: Scenario) -> PaoiSummary:
    """Correlated devices, load model 2: fused waiting-free cycle plus the
    mean schedule-alignment waiting time X_n."""
    w, ps = _distance_profile(success_law, scenario)
    if scenario.lambda_a == 0.0 or np.any(ps < P_FLOOR):
        return _summary(math.inf, scenario, 2, "correlated", "exact")
    sums = _fused_ccdf_sum(2, ps, scenario.lambda_a, scenario.n_d, scenario.n_d)
    mean = float(np.sum(w * sums)) + waiting_time_xn(scenario.lambda_a, scenario.n_d)
    return _summary(mean, scenario, 2, "correlated", "exact")


def mean_paoi_uncorrelated_lm2(success_law, scenario: Scenario) -> PaoiSummary:
    """Uncorrelated devices, load model 2.

    A peak spans two consecutive update cycles of one device, each carrying
    a transmission time T_n = 1 + N_d(1-P_s)/P_s and a schedule wait X_n,
    plus one interarrival: mean = 1/lambda_a + 2 E[T_n] + 2 X_n.
    """
    w, ps = _distance_profile(success_law, scenario)
    if scenario.lambda_a == 0.0 or np.any(ps < P_FLOOR):
        return _summary(math.inf, scenario, 2, "uncorrelated", "exact")
    t_n = 1.0 + scenario.n_d * (1.0 - ps) / ps
    mean = (1.0 / scenario.lambda_a + 2.0 * float(np.sum(w * t_n))
            + 2.0 * waiting_time_xn(scenario.lambda_a, scenario.n_d))
    return _summary(mean, scenario, 2, "uncorrelated", "exact")


def mean_transmission_time_lm2(p_s: float, n_d: int) -> float:
    """T_n = sum_{t>=0} (t N_d + 1) P_s (1-P_s)^t = 1 + N_d (1-P_s)/P_s."""
    if not 0.0 < p_s <= 1.0:
        raise ValueError(f"p_s out of range: {p_s!r}")
    return 1.0 + n_d * (1.0 - p_s) / p_s


@dataclass(frozen=True)
class ConstantSuccessLaw:
    """Distance- and link-independent success probability, for tests and
    closed-form corner cases."""

    p: float
    mean_activity: float = 0.0

    def p_success(self, r, link: str):
        return self.p if np.ndim(r) == 0 else np.full(np.shape(r), self.p)
