"""Device activity: conditional activity laws for the two load models and
the fixed-point solution of the mean activity probability.

The mean activity probability pi_bar sets the interferer density, which sets
the success-probability distribution, which in turn sets the activity; the
self-consistent value solves pi_bar = integral_0^1 F_{P_s}(g(x)) dx with
F_{P_s} the (beta-approximated) distribution of the conditional success
probability at that same pi_bar and g(x) the load-model-specific clamp map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario
from .sinr import Moments, meta_distribution_curve, moments


class ActivityConvergenceError(RuntimeError):
    """Fixed-point iteration did not converge; carries the last two iterates."""

    def __init__(self, last: float, prev: float, iterations: int):
        super().__init__(
            f"activity fixed point not converged after {iterations} iterations "
            f"(last iterates {prev:.8f}, {last:.8f})")
        self.last = last
        self.prev = prev


def _check_load_model(load_model: int) -> None:
    if load_model not in (1, 2):
        raise ValueError(f"load_model must be 1 or 2, got {load_model!r}")


def conditional_activity(load_model: int, scenario: Scenario, p_s: float) -> float:
    """Steady-state activity probability of a device with conditional
    success probability ``p_s``.

    Load model 1 (bandwidth split): the device is busy while generating or
    retransmitting, pi = N_d*lambda_a / (N_d*lambda_a + p_s).  Load model 2
    (time split): the slot is idle only when the previous update succeeded
    and no device generated a new one, pi = p_s*lambda_a'' + (1 - p_s).
    """
    _check_load_model(load_model)
    if not 0.0 <= p_s <= 1.0:
        raise ValueError(f"p_s must be in [0, 1], got {p_s!r}")
    if load_model == 1:
        lam = scenario.n_d * scenario.lambda_a
        if lam == 0.0 and p_s == 0.0:
            raise ValueError("activity undefined for lambda_a = 0 and p_s = 0")
        if lam == 0.0:
            return 0.0
        return min(1.0, lam / (lam + p_s))
    lam2 = 1.0 - (1.0 - scenario.lambda_a) ** scenario.n_d
    return min(1.0, max(0.0, p_s * lam2 + (1.0 - p_s)))


def _clamp_map(load_model: int, scenario: Scenario, x: np.ndarray) -> np.ndarray:
    """g(x): success-probability level below which a device with activity
    state x is active, clamped to [0, 1]."""
    if load_model == 1:
        lam = scenario.n_d * scenario.lambda_a
        with np.errstate(divide="ignore"):
            g = np.where(x > 0.0, (1.0 - x) * lam / np.maximum(x, 1e-300), np.inf)
    else:
        lam2 = 1.0 - (1.0 - scenario.lambda_a) ** scenario.n_d
        if lam2 >= 1.0:
            return np.where(x < 1.0, 1.0, 0.0)
        g = (1.0 - x) / (1.0 - lam2)
    return np.minimum(1.0, np.maximum(0.0, g))


def _kink(load_model: int, scenario: Scenario) -> float:
    """x below which g(x) saturates at 1."""
    if load_model == 1:
        lam = scenario.n_d * scenario.lambda_a
        return lam / (1.0 + lam)
    return 1.0 - (1.0 - scenario.lambda_a) ** scenario.n_d


def _rhs(load_model: int, scenario: Scenario, mom: Moments) -> float:
    """integral_0^1 F_{P_s}(g(x)) dx with the clamp point split out."""
    x_star = _kink(load_model, scenario)
    if x_star >= 1.0:
        return 1.0
    nodes, weights = np.polynomial.legendre.leggauss(64)
    x = 0.5 * (x_star + 1.0) + 0.5 * (1.0 - x_star) * nodes
    w = 0.5 * (1.0 - x_star) * weights
    g = _clamp_map(load_model, scenario, x)
    cdf = 1.0 - meta_distribution_curve(mom, g)
    # below the kink g(x) = 1 and the CDF contributes exactly 1
    return float(x_star + w @ cdf)


@dataclass(frozen=True)
class ActivitySolution:
    pi_bar: float
    iterations: int
    residual: float
    load_model: int
    moments: Moments

    def __post_init__(self):
        if not 0.0 <= self.pi_bar <= 1.0:
            raise ValueError(f"pi_bar out of range: {self.pi_bar!r}")


def solve_mean_activity(load_model: int, scenario: Scenario,
                        tol: float = 1e-6, max_iter: int = 60) -> ActivitySolution:
    """Solve the mean-activity fixed point by damped iteration (omega = 0.5,
    started at lambda_a) with a bisection safety net.

    The right-hand side is nondecreasing in pi_bar (more interference lowers
    the success probability, which raises activity), so a sign-preserving
    bracket on h(pi) = RHS(pi) - pi always exists on [0, 1].
    """
    _check_load_model(load_model)
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    # degenerate corners that need no interference integrals
    if load_model == 1 and scenario.lambda_a == 0.0:
        mom = moments(scenario, 0.0)
        return ActivitySolution(0.0, 0, 0.0, 1, mom)
    if load_model == 2 and scenario.lambda_a == 1.0:
        mom = moments(scenario, 1.0)
        return ActivitySolution(1.0, 0, 0.0, 2, mom)

    omega = 0.5
    pi = float(scenario.lambda_a)
    lo, hi = 0.0, 1.0          # bracket with h(lo) >= 0 >= h(hi)
    prev_pi, prev_h = None, None
    mom = moments(scenario, pi)
    for it in range(1, max_iter + 1):
        rhs = _rhs(load_model, scenario, mom)
        h = rhs - pi
        if abs(h) <= tol:
            return ActivitySolution(pi, it, abs(h), load_model, mom)
        if h > 0.0:
            lo = max(lo, pi)
        else:
            hi = min(hi, pi)
        # secant step once two iterates exist, else damped fixed point;
        # fall back to bisection whenever the step leaves the bracket
        if prev_h is not None and h != prev_h:
            nxt = pi - h * (pi - prev_pi) / (h - prev_h)
        else:
            nxt = (1.0 - omega) * pi + omega * rhs
        prev_pi, prev_h = pi, h
        pi = nxt
        if not lo < pi < hi:
            pi = 0.5 * (lo + hi)
        mom = moments(scenario, pi)
    raise ActivityConvergenceError(pi, prev_pi if prev_pi is not None else pi,
                                   max_iter)
