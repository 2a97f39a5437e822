"""Matern-cluster topology sampling and the serving-link distance density."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario


@dataclass(frozen=True)
class Topology:
    """One realization of the clustered field, seen from the typical cluster
    at the origin.

    ``typical_devices``: horizontal distances of the N_d typical-cluster
    devices to their UAV.  ``interferers``: per non-typical cluster, the pair
    (horizontal distance of its active device to the typical UAV, horizontal
    distance of that device to its own cluster UAV).
    """

    typical_devices: np.ndarray
    interferers: np.ndarray  # shape (n, 2): (dist to typical UAV, dist to own UAV)
    seed: int

    @property
    def n_interferers(self) -> int:
        return self.interferers.shape[0]


def serving_distance_pdf(scenario: Scenario, r) -> np.ndarray | float:
    """Radial density 2r/r_c^2 of a device uniform in the cluster disk."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > scenario.r_c):
        raise ValueError("serving distance outside [0, r_c]")
    out = 2.0 * r / scenario.r_c**2
    return out if out.ndim else float(out)


def _uniform_disk(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_topology(scenario: Scenario, window_radius: float,
                    seed: int | np.random.Generator) -> Topology:
    """Sample cluster centers as a PPP in a disk window, with the typical
    cluster pinned at the origin, one uniform-in-disk interferer per other
    cluster and N_d devices in the typical cluster.

    ``seed`` may be an integer or an existing Generator (consumed in place)."""
    if window_radius <= scenario.r_c:
        raise ValueError("window_radius must exceed the cluster radius")
    if isinstance(seed, np.random.Generator):
        rng, seed = seed, -1
    else:
        rng = np.random.default_rng(seed)

    n_clusters = rng.poisson(scenario.lambda_u * np.pi * window_radius**2)
    centers = _uniform_disk(rng, window_radius, n_clusters)

    offsets = _uniform_disk(rng, scenario.r_c, n_clusters)
    positions = centers + offsets
    d_typical = np.hypot(positions[:, 0], positions[:, 1])
    d_own = np.hypot(offsets[:, 0], offsets[:, 1])
    interferers = np.column_stack((d_typical, d_own))

    typical = scenario.r_c * np.sqrt(rng.random(scenario.n_d))
    return Topology(typical_devices=typical, interferers=interferers, seed=seed)
