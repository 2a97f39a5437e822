"""Monte-Carlo engines: full-stack SINR simulation over sampled cluster
topologies, and slot-accurate queue simulation of the update process.

Two fidelities:

* ``full_sinr`` — sample a topology per realization, redraw fading and
  interferer activity per slot, and measure empirical success/activity.
* ``queue_level`` — take a success law as given and simulate the slotted
  update queues alone (event-driven over renewal cycles, exact in
  distribution), for long-horizon PAoI estimates.

Per-realization RNG streams derive from ``default_rng([seed, index])`` so
runs are reproducible and realizations order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import link_params, los_probability, transmit_power
from .geometry import sample_topology
from .scenario import Scenario

WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    realizations: int = 100
    slots_per_realization: int = 1000
    window_radius: float | None = None   # default: 10 / sqrt(lambda_u)
    seed: int = 0
    fidelity: str = "full_sinr"          # 'full_sinr' | 'queue_level'

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.slots_per_realization < 10:
            raise ValueError("slots_per_realization too small for warmup")
        if self.fidelity not in ("full_sinr", "queue_level"):
            raise ValueError(f"unknown fidelity {self.fidelity!r}")

    @property
    def window(self) -> float:
        if self.window_radius is not None:
            return self.window_radius
        return 10.0 / math.sqrt(self.scenario.lambda_u)

    @property
    def warmup(self) -> int:
        return int(WARMUP_FRACTION * self.slots_per_realization)


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    n_samples: int
    metric: str                      # activity | mean_paoi | success_prob | coverage
    flagged: bool = False            # non-stationarity / non-convergence

    def ci(self) -> tuple[float, float]:
        return (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _interferer_marks(scenario: Scenario, topo, rng):
    """Received-power coefficient and fading shape of every interferer at
    the typical UAV, with both link marks drawn."""
    d_typ = topo.interferers[:, 0]
    d_own = topo.interferers[:, 1]
    own_los = rng.random(d_own.size) < los_probability(scenario, d_own)
    typ_los = rng.random(d_typ.size) < los_probability(scenario, d_typ)
    p = np.where(own_los,
                 transmit_power(scenario, np.minimum(d_own, scenario.r_c), "los"),
                 transmit_power(scenario, np.minimum(d_own, scenario.r_c), "nlos"))
    z = np.hypot(d_typ, scenario.h)
    coeff = np.where(typ_los,
                     scenario.eta_l * p * z ** (-scenario.alpha_l),
                     scenario.eta_n * p * z ** (-scenario.alpha_n))
    shape = np.where(typ_los, scenario.m_l, scenario.m_n)
    return coeff, shape


def _interference_series(scenario: Scenario, coeff, shape, pi_bar, slots, rng):
    """Aggregate interference power per slot: iid activity thinning and
    Nakagami fading per interferer per slot."""
    n = coeff.size
    if n == 0 or pi_bar == 0.0:
        return np.zeros(slots)
    out = np.zeros(slots)
    # draw fading only for (interferer, slot) pairs that are actually active
    for m in np.unique(shape):
        rows = np.flatnonzero(shape == m)
        active = rng.random((rows.size, slots)) < pi_bar
        idx_r, idx_t = np.nonzero(active)
        gain = rng.gamma(shape=float(m), scale=1.0 / float(m), size=idx_r.size)
        out += np.bincount(idx_t, weights=coeff[rows[idx_r]] * gain,
                           minlength=slots)
    return out


def _typical_signal(scenario: Scenario, r, rng):
    """Per-device (coefficient, fading shape, is_los) with the link state
    drawn once per realization."""
    is_los = rng.random(r.size) < los_probability(scenario, r)
    big_r = np.hypot(r, scenario.h)
    out_c = np.empty(r.size)
    out_m = np.empty(r.size, dtype=int)
    for link, mask in (("los", is_los), ("nlos", ~is_los)):
        if not mask.any():
            continue
        _, alpha, m, eta, _ = link_params(scenario, link)
        p = transmit_power(scenario, r[mask], link)
        out_c[mask] = eta * p * big_r[mask] ** (-alpha)
        out_m[mask] = m
    return out_c, out_m, is_los


def _success_series(scenario: Scenario, sig_c, sig_m, noise_interf, rng):
    """Boolean success indicators per (device, slot): would an attempt that
    starts in this slot succeed?"""
    n_dev = sig_c.size
    slots = noise_interf.size
    gain = np.empty((n_dev, slots))
    for m in np.unique(sig_m):
        rows = sig_m == m
        gain[rows] = rng.gamma(shape=float(m), scale=1.0 / float(m),
                               size=(int(rows.sum()), slots))
    sinr = sig_c[:, None] * gain / noise_interf[None, :]
    return sinr > scenario.theta


@dataclass(frozen=True)
class SuccessProbResult:
    """Binned empirical success probabilities plus the distance-averaged
    coverage estimate."""
    bin_edges: np.ndarray
    per_bin: dict          # (bin_index, 'los'|'nlos') -> SimEstimate
    coverage: SimEstimate


def simulate_success_prob(config: SimConfig, pi_bar: float,
                          n_bins: int = 10) -> SuccessProbResult:
    """Empirical conditional success probability at fixed interferer
    activity ``pi_bar``, binned by serving distance and link state."""
    if config.fidelity != "full_sinr":
        raise ValueError("simulate_success_prob requires full_sinr fidelity")
    if not 0.0 <= pi_bar <= 1.0:
        raise ValueError("pi_bar must be in [0, 1]")
    sc = config.scenario
    edges = np.linspace(0.0, sc.r_c, n_bins + 1)
    # per-realization sums for cluster-robust errors
    hits = np.zeros((config.realizations, n_bins, 2))
    tries = np.zeros((config.realizations, n_bins, 2))
    cov = np.zeros(config.realizations)
    for i in range(config.realizations):
        rng = _rng(config.seed, i)
        topo = sample_topology(sc, config.window, rng)
        coeff, shape = _interferer_marks(sc, topo, rng)
        interf = _interference_series(sc, coeff, shape, pi_bar,
                                      config.slots_per_realization, rng)
        r = topo.typical_devices
        sig_c, sig_m, is_los = _typical_signal(sc, r, rng)
        ok = _success_series(sc, sig_c, sig_m, sc.sigma2 + interf, rng)
        bins = np.clip(np.digitize(r, edges) - 1, 0, n_bins - 1)
        link_idx = np.where(is_los, 0, 1)
        for d in range(r.size):
            hits[i, bins[d], link_idx[d]] += ok[d].sum()
            tries[i, bins[d], link_idx[d]] += ok.shape[1]
        cov[i] = ok.mean()
    per_bin = {}
    for b in range(n_bins):
        for j, link in enumerate(("los", "nlos")):
            t = tries[:, b, j].sum()
            if t == 0:
                continue   # empty bins are absent, not zero
            per_real = hits[:, b, j].sum() / t
            used = tries[:, b, j] > 0
            means = hits[used, b, j] / tries[used, b, j]
            se = means.std(ddof=1) / math.sqrt(used.sum()) if used.sum() > 1 else 0.0
            per_bin[(b, link)] = SimEstimate(float(per_real), float(se),
                                             int(t), "success_prob")
    cov_est = SimEstimate(float(cov.mean()),
                          float(cov.std(ddof=1) / math.sqrt(config.realizations))
                          if config.realizations > 1 else 0.0,
                          config.realizations, "coverage")
    return SuccessProbResult(bin_edges=edges, per_bin=per_bin, coverage=cov_est)


def _slot_queue_activity(load_model: int, success, lambda_a: float,
                         n_d: int, warmup: int, rng) -> np.ndarray:
    """Slot-state queue on precomputed per-slot success indicators, batched
    over realizations; ``success`` has shape (R, N_d, slots).  Returns the
    mean device activity per realization.

    LM1: transmitting devices occupy every slot, one attempt = N_d slots.
    LM2: device d may transmit only in slots t with t % N_d == d.
    """
    n_real, n_dev, slots = success.shape
    device = np.broadcast_to(np.arange(n_dev) % n_d, (n_real, n_dev))
    pending = np.zeros((n_real, n_dev), dtype=bool)   # generated, not delivered
    remaining = np.zeros((n_real, n_dev), dtype=int)  # LM1: slots left in attempt
    attempt_ok = np.zeros((n_real, n_dev), dtype=bool)
    active_slots = np.zeros((n_real, n_dev))
    own_slots = np.zeros((n_real, n_dev))
    counted = 0
    for t in range(slots):
        measure = t >= warmup
        idle_at_start = ~pending
        if load_model == 1:
            starting = pending & (remaining == 0)
            attempt_ok = np.where(starting, success[:, :, t], attempt_ok)
            remaining = np.where(starting, n_d, remaining)
            remaining = np.where(pending, remaining - 1, remaining)
            done = pending & (remaining == 0) & attempt_ok
            if measure:
                active_slots += pending
                counted += 1
            pending = pending & ~done
        else:
            own = device == (t % n_d)
            tx = own & pending
            ok = tx & success[:, :, t]
            if measure:
                active_slots += tx
                own_slots += own
            pending = pending & ~ok
        # generation at slot end, only for devices idle the whole slot
        arrivals = idle_at_start & (rng.random((n_real, n_dev)) < lambda_a)
        pending = pending | arrivals
        if load_model == 1:
            remaining = np.where(arrivals, 0, remaining)
    if load_model == 1:
        return active_slots.mean(axis=1) / max(counted, 1)
    with np.errstate(invalid="ignore"):
        frac = np.where(own_slots > 0, active_slots / np.maximum(own_slots, 1), 0.0)
    return frac.mean(axis=1)


def simulate_activity_fixed_point(config: SimConfig, load_model: int,
                                  max_rounds: int = 20,
                                  pi0: float | None = None) -> SimEstimate:
    """Self-consistent empirical mean activity: alternate full-SINR success
    simulation (interferers thinned at the current activity) with queue
    simulation of the typical devices, until the activity used matches the
    activity measured within 2 standard errors."""
    if config.fidelity != "full_sinr":
        raise ValueError("simulate_activity_fixed_point requires full_sinr fidelity")
    if load_model not in (1, 2):
        raise ValueError("load_model must be 1 or 2")
    sc = config.scenario
    if sc.lambda_a == 0.0 and load_model == 1:
        return SimEstimate(0.0, 0.0, 0, "activity")
    pi = float(sc.lambda_a) if pi0 is None else float(min(max(pi0, 0.0), 1.0))
    measured, se = pi, 0.0
    for round_idx in range(max_rounds):
        ok = np.empty((config.realizations, sc.n_d, config.slots_per_realization),
                      dtype=bool)
        for i in range(config.realizations):
            rng = _rng(config.seed, (round_idx << 20) + i)
            topo = sample_topology(sc, config.window, rng)
            coeff, shape = _interferer_marks(sc, topo, rng)
            interf = _interference_series(sc, coeff, shape, pi,
                                          config.slots_per_realization, rng)
            sig_c, sig_m, _ = _typical_signal(sc, topo.typical_devices, rng)
            ok[i] = _success_series(sc, sig_c, sig_m, sc.sigma2 + interf, rng)
        q_rng = _rng(config.seed, (round_idx << 20) + (1 << 19))
        per_real = _slot_queue_activity(load_model, ok, sc.lambda_a,
                                        sc.n_d, config.warmup, q_rng)
        measured = float(per_real.mean())
        se = float(per_real.std(ddof=1) / math.sqrt(config.realizations)) \
            if config.realizations > 1 else 0.0
        if abs(measured - pi) <= 2.0 * max(se, 1e-4):
            return SimEstimate(measured, se, config.realizations, "activity")
        pi = 0.5 * (pi + measured)
    return SimEstimate(measured, se, config.realizations, "activity", flagged=True)


# ---------------------------------------------------------------------------
# queue-level fidelity: event-driven renewal simulation
# ---------------------------------------------------------------------------

def _marginal_success(success_law, scenario: Scenario, r: np.ndarray) -> np.ndarray:
    """Per-attempt success probability with the link state marginalized."""
    pl = los_probability(scenario, r)
    ps_l = np.broadcast_to(np.asarray(success_law.p_success(r, "los"), dtype=float), r.shape)
    ps_n = np.broadcast_to(np.asarray(success_law.p_success(r, "nlos"), dtype=float), r.shape)
    return np.clip(pl * ps_l + (1.0 - pl) * ps_n, 0.0, 1.0)


def _geometric(rng, p, size):
    """Geometric on {1, 2, ...}; tolerates p = 1 exactly."""
    if np.ndim(p) == 0 and p == 1.0:
        return np.ones(size, dtype=np.int64)
    return rng.geometric(p, size=size).astype(np.int64)


def _lm1_uncorrelated(rng, p, lam, n_d, slots):
    """One device's renewal cycles under LM1; returns (reception times,
    peaks, busy slots per cycle, cycle lengths)."""
    est_cycles = int(slots / (1.0 / lam + n_d / p) * 1.3) + 64
    w = _geometric(rng, lam, est_cycles)
    s = n_d * _geometric(rng, p, est_cycles)
    cycles = w + s
    rec = np.cumsum(cycles)
    while rec[-1] < slots:
        w2 = _geometric(rng, lam, est_cycles)
        s2 = n_d * _geometric(rng, p, est_cycles)
        w = np.concatenate([w, w2]); s = np.concatenate([s, s2])
        cycles = w + s
        rec = np.cumsum(cycles)
    peaks = s[:-1] + w[1:] + s[1:]
    return rec, peaks, s, cycles


def _lm2_uncorrelated(rng, p, lam, n_d, slots):
    """One device's renewal cycles under LM2 (periodic polling)."""
    est_cycles = int(slots / (1.0 / lam + n_d / p) * 1.3) + 64
    rec_parts, peaks_parts, busy_parts, cyc_parts = [], [], [], []
    w = _geometric(rng, lam, est_cycles)
    k = _geometric(rng, p, est_cycles)
    while True:
        first = n_d * np.ceil((w + 1) / n_d).astype(np.int64)   # first own slot
        cycles = first + n_d * (k - 1)
        rec = np.cumsum(cycles)
        peaks = cycles[1:] + (cycles[:-1] - w[:-1])
        busy = k
        if rec[-1] >= slots:
            return rec, peaks, busy, cycles
        w2 = _geometric(rng, lam, est_cycles)
        k2 = _geometric(rng, p, est_cycles)
        w = np.concatenate([w, w2]); k = np.concatenate([k, k2])


def _lm1_correlated(rng, p_vec, lam, n_d, slots):
    """Fused rounds under LM1: all devices restart on any delivery; the
    fused peak is the round length."""
    mean_round = 1.0 / lam + n_d / max(float(np.min(p_vec)), 1e-9)
    est = int(slots / mean_round * 1.3) + 64
    def draw(n):
        w = _geometric(rng, lam, (n, p_vec.size))
        if np.all(p_vec == 1.0):
            k = np.ones((n, p_vec.size), dtype=np.int64)
        else:
            u = rng.random((n, p_vec.size))
            k = np.ceil(np.log1p(-u) / np.log1p(-np.minimum(p_vec, 1 - 1e-15))
                        ).astype(np.int64)
            k[:, p_vec == 1.0] = 1
        done = w + n_d * k
        rounds = done.min(axis=1)
        busy = np.maximum(rounds[:, None] - w, 0).sum(axis=1)
        return rounds, busy
    rounds, busy = draw(est)
    rec = np.cumsum(rounds)
    while rec[-1] < slots:
        r2, b2 = draw(est)
        rounds = np.concatenate([rounds, r2]); busy = np.concatenate([busy, b2])
        rec = np.cumsum(rounds)
    return rec, rounds, busy, rounds


def _lm2_correlated(rng, p_vec, lam, n_d, slots):
    """Fused rounds under LM2: any delivery refreshes the shared state and
    all devices restart, so recorded peaks are the round lengths.  Device d
    owns slots congruent to d mod N_d, which couples consecutive rounds
    through the phase of the previous delivery.

    Returns (reception times, peaks, per-device attempt counts, per-device
    elapsed own-slot-normalized times) — the last two pooled for occupancy."""
    n_dev = p_vec.size
    mean_round = 1.0 / lam + 1 + n_d / max(float(np.min(p_vec)), 1e-9)
    est = int(slots / mean_round * 1.4) + 64
    w = _geometric(rng, lam, (est, n_dev))
    if np.all(p_vec == 1.0):
        k = np.ones((est, n_dev), dtype=np.int64)
    else:
        u = rng.random((est, n_dev))
        k = np.ceil(np.log1p(-u) / np.log1p(-np.minimum(p_vec, 1 - 1e-15))
                    ).astype(np.int64)
        k[:, p_vec == 1.0] = 1
    phases = np.arange(n_dev) % n_d
    # completion time of each device for each possible start phase s: first
    # attempt at the earliest slot >= w + 1 congruent to the device's phase
    comp = np.empty((n_d, est, n_dev), dtype=np.int64)
    for s in range(n_d):
        ready = w + 1
        shift = (phases[None, :] - (ready + s)) % n_d
        comp[s] = ready + shift + n_d * (k - 1)
    rounds_by_s = comp.min(axis=2)
    # attempts by each device before the round ends: own slots in
    # [first attempt, round end], zero if it never got to transmit
    first_by_s = comp - n_d * (k[None, :, :] - 1)
    n_att = (rounds_by_s[:, :, None] - first_by_s) // n_d + 1
    attempts_by_s = np.maximum(n_att, 0).sum(axis=2).tolist()
    rounds_by_s = rounds_by_s.tolist()
    rounds = np.empty(est, dtype=np.int64)
    attempts = np.empty(est, dtype=np.int64)
    s = 0
    total = 0
    n_used = 0
    for i in range(est):
        length = rounds_by_s[s][i]
        rounds[i] = length
        attempts[i] = attempts_by_s[s][i]
        s = (s + length) % n_d
        total += length
        n_used = i + 1
        if total >= slots:
            break
    rounds = rounds[:n_used].astype(float)
    attempts = attempts[:n_used].astype(float)
    rec = np.cumsum(rounds)
    return rec, rounds, attempts, rounds


def simulate_queue(config: SimConfig, success_law, load_model: int,
                   device_mode: str):
    """Slot-accurate queue simulation; returns (activity, mean PAoI)
    estimates with realization-level standard errors.

    Correlated devices share one observed process: any delivery refreshes
    the monitor and supersedes in-flight stale copies, so recorded peaks are
    the inter-delivery gaps.  Uncorrelated devices track independent
    processes; peaks span two consecutive update cycles of a device.
    """
    if load_model not in (1, 2):
        raise ValueError("load_model must be 1 or 2")
    if device_mode not in ("correlated", "uncorrelated"):
        raise ValueError(f"unknown device_mode {device_mode!r}")
    sc = config.scenario
    if sc.lambda_a == 0.0:
        nan = SimEstimate(math.inf, 0.0, 0, "mean_paoi")
        return SimEstimate(0.0, 0.0, 0, "activity"), nan
    slots = config.slots_per_realization
    warm = config.warmup
    act = np.empty(config.realizations)
    pk = np.empty(config.realizations)
    flagged = False
    for i in range(config.realizations):
        rng = _rng(config.seed, i)
        r = sc.r_c * np.sqrt(rng.random(sc.n_d))
        p_vec = _marginal_success(success_law, sc, r)
        if device_mode == "uncorrelated":
            peaks_all, busy_tot, time_tot, own_tot = [], 0.0, 0.0, 0.0
            for d in range(sc.n_d):
                p = float(p_vec[d])
                if load_model == 1:
                    rec, peaks, busy, cycles = _lm1_uncorrelated(rng, p, sc.lambda_a,
                                                                 sc.n_d, slots)
                else:
                    rec, peaks, busy, cycles = _lm2_uncorrelated(rng, p, sc.lambda_a,
                                                                 sc.n_d, slots)
                keep = (rec[1:] >= warm) & (rec[1:] < slots)
                peaks_all.append(peaks[keep])
                inside = (rec >= warm) & (rec < slots)
                busy_tot += busy[inside].sum()
                time_tot += cycles[inside].sum()
                own_tot += cycles[inside].sum() / sc.n_d
            peaks_i = np.concatenate(peaks_all)
            denom = time_tot if load_model == 1 else own_tot
            act[i] = busy_tot / max(denom, 1.0)
        else:
            if load_model == 1:
                rec, peaks, busy, rounds = _lm1_correlated(rng, p_vec, sc.lambda_a,
                                                           sc.n_d, slots)
                keep = (rec >= warm) & (rec < slots)
                act[i] = busy[keep].sum() / max((sc.n_d * rounds[keep]).sum(), 1.0)
                peaks_i = peaks[keep]
            else:
                rec, peaks, attempts, rounds = _lm2_correlated(rng, p_vec, sc.lambda_a,
                                                               sc.n_d, slots)
                keep = (rec >= warm) & (rec < slots)
                peaks_i = peaks[keep]
                # occupied own-slot fraction, pooled over devices
                act[i] = float(attempts[keep].sum() / max(rounds[keep].sum(), 1.0))
        if peaks_i.size == 0:
            pk[i] = math.nan
            flagged = True
            continue
        pk[i] = peaks_i.mean()
        # non-stationarity guard: 2nd vs last quarter of the peak stream
        q = peaks_i.size // 4
        if q >= 8:
            a, b = peaks_i[q:2 * q], peaks_i[-q:]
            spread = math.sqrt(a.var(ddof=1) / q + b.var(ddof=1) / q)
            if spread > 0 and abs(a.mean() - b.mean()) > 3.0 * spread:
                flagged = True
    n = config.realizations
    act_est = SimEstimate(float(act.mean()),
                          float(act.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                          n, "activity", flagged)
    good = ~np.isnan(pk)
    pk_mean = float(pk[good].mean()) if good.any() else math.inf
    pk_se = float(pk[good].std(ddof=1) / math.sqrt(good.sum())) if good.sum() > 1 else 0.0
    pk_est = SimEstimate(pk_mean, pk_se, int(good.sum()), "mean_paoi", flagged)
    return act_est, pk_est
