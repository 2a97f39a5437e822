"""Scenario definition: the full parameter set of the UAV-assisted IoT uplink.

All quantities are SI (meters, watts, linear ratios).  The cluster density
``lambda_u`` is stored per square meter; presets convert from km^-2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class ScenarioError(ValueError):
    """Raised when a parameter set violates a model invariant."""


def max_compensation(alpha: float, rho: float, p_u: float, r_c: float, h: float) -> float:
    """Largest compensation factor for which path-loss inversion never
    exceeds the power budget anywhere in the cluster:
    eps_max = log_{sqrt(r_c^2+h^2)}(p_u / rho) / alpha.
    """
    d_max = math.hypot(r_c, h)
    return math.log(p_u / rho) / (alpha * math.log(d_max))


@dataclass(frozen=True)
class Scenario:
    """Static system parameters (cluster geometry, channel, power control,
    SINR threshold and traffic).

    ``eta_l``/``eta_n`` are linear additional losses, ``theta`` is the linear
    SINR threshold.  ``eps_l``/``eps_n`` default to the maximum value allowed
    by the power budget (full truncated inversion); pass explicit values to
    study partial compensation.
    """

    lambda_u: float = 1e-6          # cluster density, m^-2
    r_c: float = 120.0              # cluster radius, m
    h: float = 100.0                # UAV altitude, m
    a: float = 9.6                  # LoS environment parameter
    b: float = 0.16                 # LoS environment parameter
    rho_l: float = 1e-3             # LoS power-control target, W
    rho_n: float = 1e-3             # NLoS power-control target, W
    p_u: float = 0.1                # max transmit power, W
    alpha_l: float = 2.1
    alpha_n: float = 4.0
    m_l: int = 3
    m_n: int = 1
    eta_l: float = 1.0              # LoS additional loss (0 dB)
    eta_n: float = 0.01             # NLoS additional loss (-20 dB)
    sigma2: float = 1e-9            # noise power, W
    theta: float = 1.0              # SINR threshold (0 dB)
    n_d: int = 1                    # devices per cluster
    lambda_a: float = 0.5           # per-slot update-generation probability
    t_slot: float = 1.0             # slot duration (abstract unit T)
    eps_l: float | None = None      # None -> maximum allowed by (p_u, rho, r_c, h)
    eps_n: float | None = None

    def __post_init__(self) -> None:
        if self.eps_l is None:
            object.__setattr__(
                self, "eps_l",
                max_compensation(self.alpha_l, self.rho_l, self.p_u, self.r_c, self.h))
        if self.eps_n is None:
            object.__setattr__(
                self, "eps_n",
                max_compensation(self.alpha_n, self.rho_n, self.p_u, self.r_c, self.h))
        self.validate()

    def validate(self) -> None:
        pos = {"lambda_u": self.lambda_u, "r_c": self.r_c, "h": self.h,
               "rho_l": self.rho_l, "rho_n": self.rho_n, "p_u": self.p_u,
               "eta_l": self.eta_l, "eta_n": self.eta_n, "sigma2": self.sigma2,
               "theta": self.theta, "t_slot": self.t_slot}
        for name, value in pos.items():
            if not value > 0.0:
                raise ScenarioError(f"{name} must be positive, got {value!r}")
        if not (isinstance(self.m_l, int) and isinstance(self.m_n, int)
                and self.m_l >= 1 and self.m_n >= 1):
            raise ScenarioError("fading shapes m_l, m_n must be integers >= 1")
        if not (isinstance(self.n_d, int) and self.n_d >= 1):
            raise ScenarioError(f"n_d must be a positive integer, got {self.n_d!r}")
        if not 0.0 <= self.lambda_a <= 1.0:
            raise ScenarioError(f"lambda_a must be in [0, 1], got {self.lambda_a!r}")
        for link, eps, alpha, rho in (("l", self.eps_l, self.alpha_l, self.rho_l),
                                      ("n", self.eps_n, self.alpha_n, self.rho_n)):
            hi = max_compensation(alpha, rho, self.p_u, self.r_c, self.h)
            if not 0.0 <= eps <= hi + 1e-12:
                raise ScenarioError(
                    f"eps_{link}={eps:.6g} outside the power-budget range [0, {hi:.6g}]")

    def with_(self, **changes) -> "Scenario":
        """Copy with selected fields replaced (re-validated)."""
        return replace(self, **changes)


# LoS environment parameters (a, b) from the air-to-ground channel model.
ENVIRONMENTS: dict[str, tuple[float, float]] = {
    "suburban": (9.6, 0.16),
    "urban": (4.88, 0.43),
    "dense": (12.0, 0.11),
    "highrise": (27.0, 0.08),
}


def environment_scenario(name: str, **overrides) -> Scenario:
    """Scenario with the default parameter table and a named environment."""
    try:
        a, b = ENVIRONMENTS[name]
    except KeyError:
        raise ScenarioError(f"unknown environment {name!r}; "
                            f"choose from {sorted(ENVIRONMENTS)}") from None
    return Scenario(a=a, b=b, **overrides)
