"""Command-line entry point: parameter sweeps over either engine, CSV
persistence and named figure-reproduction presets.

Config files are flat ``key = value`` text with dotted section names and SI
units spelled out in the key (``geometry.r_c_m``, ``channel.sigma2_w``).
Output rows follow the fixed schema
``swept_param,swept_value,load_model,device_mode,engine,metric,value,stderr,runtime_s``
with floats at 9 significant digits and a blank stderr on analytic rows.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 simulation flagged as non-stationary.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .activity import ActivityConvergenceError, solve_mean_activity
from .scenario import ENVIRONMENTS, Scenario, ScenarioError, environment_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NONSTATIONARY = 4

CSV_HEADER = "swept_param,swept_value,load_model,device_mode,engine,metric,value,stderr,runtime_s"

SWEPT_PARAMETERS = ("lambda_a", "N_d", "h", "environment")
METRICS = ("activity", "mean_paoi", "coverage")
ENGINES = ("analytic", "simulation")
DEVICE_MODES = ("correlated", "uncorrelated")


class ConfigError(ValueError):
    """Malformed config file or invalid sweep specification."""


class NumericalFailure(RuntimeError):
    """A grid point failed to produce a finite, converged value."""


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    grid: tuple
    metrics: tuple = ("activity",)
    engines: tuple = ("analytic",)
    load_models: tuple = (1,)
    device_modes: tuple = ("correlated",)
    output_path: str = "sweep.csv"

    def validate(self) -> None:
        if self.swept_parameter not in SWEPT_PARAMETERS:
            raise ConfigError(f"swept_parameter must be one of {SWEPT_PARAMETERS}, "
                              f"got {self.swept_parameter!r}")
        if len(self.grid) == 0:
            raise ConfigError("grid must be nonempty")
        if self.swept_parameter != "environment" and len(self.grid) > 1:
            vals = [float(v) for v in self.grid]
            increasing = all(b > a for a, b in zip(vals, vals[1:]))
            decreasing = all(b < a for a, b in zip(vals, vals[1:]))
            if not (increasing or decreasing):
                raise ConfigError("grid must be strictly monotone")
        if not self.metrics or any(m not in METRICS for m in self.metrics):
            raise ConfigError(f"metrics must be a nonempty subset of {METRICS}, "
                              f"got {self.metrics!r}")
        if not self.engines or any(e not in ENGINES for e in self.engines):
            raise ConfigError(f"engines must be a nonempty subset of {ENGINES}, "
                              f"got {self.engines!r}")
        if not self.load_models or any(m not in (1, 2) for m in self.load_models):
            raise ConfigError(f"load_models must be a nonempty subset of (1, 2), "
                              f"got {self.load_models!r}")
        if not self.device_modes or any(d not in DEVICE_MODES for d in self.device_modes):
            raise ConfigError(f"device_modes must be a nonempty subset of "
                              f"{DEVICE_MODES}, got {self.device_modes!r}")


@dataclass(frozen=True)
class SweepRow:
    swept_param: str
    swept_value: object
    load_model: int
    device_mode: str
    engine: str
    metric: str
    value: float
    stderr: float | None      # None -> blank (analytic)
    runtime_s: float

    def to_csv(self) -> str:
        sv = self.swept_value if isinstance(self.swept_value, str) \
            else _fmt(float(self.swept_value))
        err = "" if self.stderr is None else _fmt(self.stderr)
        return (f"{self.swept_param},{sv},{self.load_model},{self.device_mode},"
                f"{self.engine},{self.metric},{_fmt(self.value)},{err},"
                f"{_fmt(self.runtime_s)}")


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, ".9g")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Flat dotted-key config: one ``key = value`` per line, ``#`` comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


# config key -> (Scenario field, parser)
_SCENARIO_KEYS = {
    "geometry.lambda_u_per_m2": ("lambda_u", float),
    "geometry.r_c_m": ("r_c", float),
    "geometry.h_m": ("h", float),
    "channel.a": ("a", float),
    "channel.b": ("b", float),
    "channel.rho_los_w": ("rho_l", float),
    "channel.rho_nlos_w": ("rho_n", float),
    "channel.p_u_w": ("p_u", float),
    "channel.alpha_los": ("alpha_l", float),
    "channel.alpha_nlos": ("alpha_n", float),
    "channel.m_los": ("m_l", int),
    "channel.m_nlos": ("m_n", int),
    "channel.eta_los": ("eta_l", float),
    "channel.eta_nlos": ("eta_n", float),
    "channel.sigma2_w": ("sigma2", float),
    "channel.theta": ("theta", float),
    "channel.eps_los": ("eps_l", float),
    "channel.eps_nlos": ("eps_n", float),
    "traffic.lambda_a": ("lambda_a", float),
    "traffic.n_d": ("n_d", int),
    "traffic.t_slot_s": ("t_slot", float),
}

_LIST_KEYS = {
    "sweep.metrics": METRICS,
    "sweep.engines": ENGINES,
    "sweep.device_modes": DEVICE_MODES,
}


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def build_scenario(cfg: dict) -> tuple[dict, str | None]:
    """Scenario field overrides and the optional environment name from a
    parsed config."""
    fields: dict = {}
    env = cfg.get("scenario.environment")
    if env is not None and env not in ENVIRONMENTS:
        raise ConfigError(f"scenario.environment: unknown environment {env!r}")
    for key, (name, conv) in _SCENARIO_KEYS.items():
        if key in cfg:
            try:
                fields[name] = conv(cfg[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from exc
    return fields, env


def build_spec(cfg: dict) -> SweepSpec:
    try:
        swept = cfg["sweep.parameter"]
        grid_raw = _split_list(cfg["sweep.grid"])
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]!r}") from exc
    if swept == "environment":
        grid: tuple = tuple(grid_raw)
    elif swept == "N_d":
        grid = tuple(int(v) for v in grid_raw)
    else:
        grid = tuple(float(v) for v in grid_raw)
    spec = SweepSpec(
        swept_parameter=swept,
        grid=grid,
        metrics=tuple(_split_list(cfg.get("sweep.metrics", "activity"))),
        engines=tuple(_split_list(cfg.get("sweep.engines", "analytic"))),
        load_models=tuple(int(v) for v in _split_list(cfg.get("sweep.load_models", "1"))),
        device_modes=tuple(_split_list(cfg.get("sweep.device_modes", "correlated"))),
        output_path=cfg.get("sweep.output", "sweep.csv"),
    )
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _activity_sweep(env: str) -> dict:
    return {
        "scenario.environment": env,
        "traffic.n_d": "1",
        "sweep.parameter": "lambda_a",
        "sweep.grid": ",".join(f"{v / 10:.1f}" for v in range(1, 11)),
        "sweep.metrics": "activity",
        "sweep.engines": "analytic,simulation",
        "sweep.load_models": "1",
        "sweep.device_modes": "correlated",
    }


PRESETS: dict[str, dict] = {
    # Table-II environments as ready-made activity sweeps
    **{env: _activity_sweep(env) for env in ENVIRONMENTS},
    # figure recipes
    "fig5a": _activity_sweep("suburban"),
    "fig5b": _activity_sweep("urban"),
    "fig6a": {
        "scenario.environment": "dense",
        "traffic.n_d": "1",
        "sweep.parameter": "lambda_a",
        "sweep.grid": ",".join(f"{v / 10:.1f}" for v in range(1, 11)),
        "sweep.metrics": "coverage",
        "sweep.engines": "analytic,simulation",
        "sweep.load_models": "1",
        "sweep.device_modes": "correlated",
    },
    "fig6b": {
        "scenario.environment": "dense",
        "traffic.n_d": "1",
        "traffic.lambda_a": "0.5",
        "sweep.parameter": "h",
        "sweep.grid": "60,80,100,120,140",
        "sweep.metrics": "coverage",
        "sweep.engines": "analytic",
        "sweep.load_models": "1",
        "sweep.device_modes": "correlated",
    },
    "fig7a": {
        "scenario.environment": "dense",
        "traffic.lambda_a": "0.5",
        "sweep.parameter": "N_d",
        "sweep.grid": ",".join(str(n) for n in range(1, 11)),
        "sweep.metrics": "mean_paoi",
        "sweep.engines": "analytic",
        "sweep.load_models": "1,2",
        "sweep.device_modes": "correlated",
    },
    "fig7b": {
        "scenario.environment": "dense",
        "traffic.lambda_a": "0.5",
        "sweep.parameter": "N_d",
        "sweep.grid": "1,2,3,4,5,6",
        "sweep.metrics": "mean_paoi",
        "sweep.engines": "analytic",
        "sweep.load_models": "2",
        "sweep.device_modes": "correlated",
    },
    "fig8a": {
        "scenario.environment": "dense",
        "traffic.lambda_a": "0.5",
        "sweep.parameter": "N_d",
        "sweep.grid": ",".join(str(n) for n in range(8, 19)),
        "sweep.metrics": "mean_paoi",
        "sweep.engines": "analytic",
        "sweep.load_models": "1,2",
        "sweep.device_modes": "correlated",
    },
    "fig8b": {
        "scenario.environment": "dense",
        "traffic.lambda_a": "1.0",
        "sweep.parameter": "N_d",
        "sweep.grid": ",".join(str(n) for n in range(8, 19)),
        "sweep.metrics": "mean_paoi",
        "sweep.engines": "analytic",
        "sweep.load_models": "1,2",
        "sweep.device_modes": "uncorrelated",
    },
}


def list_presets() -> list[str]:
    return sorted(PRESETS)


# ---------------------------------------------------------------------------
# sweep execution
# ---------------------------------------------------------------------------

def _scenario_at(base_fields: dict, env: str | None, swept: str, value):
    fields = dict(base_fields)
    if swept == "lambda_a":
        fields["lambda_a"] = float(value)
    elif swept == "N_d":
        fields["n_d"] = int(value)
    elif swept == "h":
        # rebuild so the power-control defaults re-derive at the new altitude
        fields["h"] = float(value)
        fields.pop("eps_l", None)
        fields.pop("eps_n", None)
    elif swept == "environment":
        env = str(value)
    if env is not None:
        return environment_scenario(env, **fields)
    return Scenario(**fields)


def _mean_paoi_fn(load_model: int, device_mode: str):
    from . import paoi
    return {
        (1, "correlated"): paoi.mean_paoi_correlated_lm1,
        (1, "uncorrelated"): paoi.mean_paoi_uncorrelated_lm1,
        (2, "correlated"): paoi.mean_paoi_correlated_lm2,
        (2, "uncorrelated"): paoi.mean_paoi_uncorrelated_lm2,
    }[(load_model, device_mode)]


def _compute_grid_point(spec: SweepSpec, scenario: Scenario, value,
                        seed: int, realizations: int, slots: int):
    """All rows for one grid point.  Returns (rows, flagged)."""
    from .simulator import (SimConfig, simulate_activity_fixed_point,
                            simulate_queue, simulate_success_prob)
    from .sinr import QuadratureError, SuccessLaw, moments

    rows: list[SweepRow] = []
    flagged = False
    solutions: dict[int, object] = {}

    def _solve(lm: int):
        if lm not in solutions:
            solutions[lm] = solve_mean_activity(lm, scenario)
        return solutions[lm]

    try:
        for lm in spec.load_models:
            for metric in spec.metrics:
                mode_list = spec.device_modes if metric == "mean_paoi" else ("-",)
                for mode in mode_list:
                    for engine in spec.engines:
                        t0 = time.perf_counter()
                        err: float | None = None
                        if metric == "activity":
                            if engine == "analytic":
                                val = _solve(lm).pi_bar
                            else:
                                pi0 = _solve(lm).pi_bar if "analytic" in spec.engines else None
                                cfg = SimConfig(scenario, realizations=realizations,
                                                slots_per_realization=slots, seed=seed)
                                est = simulate_activity_fixed_point(cfg, lm, pi0=pi0)
                                val, err = est.mean, est.stderr
                                flagged |= est.flagged
                        elif metric == "coverage":
                            sol = _solve(lm)
                            if engine == "analytic":
                                val = sol.moments.m1
                            else:
                                cfg = SimConfig(scenario, realizations=realizations,
                                                slots_per_realization=max(slots // 4, 10),
                                                seed=seed)
                                est = simulate_success_prob(cfg, sol.pi_bar).coverage
                                val, err = est.mean, est.stderr
                                flagged |= est.flagged
                        else:  # mean_paoi
                            sol = _solve(lm)
                            law = SuccessLaw(scenario, sol.pi_bar)
                            if engine == "analytic":
                                val = _mean_paoi_fn(lm, mode)(law, scenario).mean_paoi
                            else:
                                cfg = SimConfig(scenario, realizations=realizations,
                                                slots_per_realization=slots, seed=seed,
                                                fidelity="queue_level")
                                _, est = simulate_queue(cfg, law, lm, mode)
                                val, err = est.mean, est.stderr
                                flagged |= est.flagged
                        rows.append(SweepRow(
                            swept_param=spec.swept_parameter, swept_value=value,
                            load_model=lm, device_mode=mode, engine=engine,
                            metric=metric, value=float(val), stderr=err,
                            runtime_s=time.perf_counter() - t0))
    except (QuadratureError, ActivityConvergenceError) as exc:
        raise NumericalFailure(
            f"grid point {spec.swept_parameter}={value}: {exc}") from exc
    return rows, flagged


def run_sweep(spec: SweepSpec, base_fields: dict, env: str | None,
              seed: int = 0, realizations: int = 100, slots: int = 1000,
              quiet: bool = False) -> tuple[SweepResult, int]:
    """Run every grid point, streaming rows to ``spec.output_path`` as each
    point completes (deterministic order).  Returns the in-memory result and
    the process exit code."""
    spec.validate()
    # fail on scenario invariants before any computation
    scenarios = [
        _scenario_at(base_fields, env, spec.swept_parameter, v) for v in spec.grid
    ]
    threads = int(os.environ.get("PAOI_LAB_THREADS", "0") or 0)
    if threads <= 0:
        threads = min(4, os.cpu_count() or 1)
    all_rows: list[SweepRow] = []
    flagged = False
    exit_code = EXIT_OK
    with open(spec.output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.flush()
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_compute_grid_point, spec, sc, v,
                            seed, realizations, slots)
                for sc, v in zip(scenarios, spec.grid)
            ]
            for v, fut in zip(spec.grid, futures):
                try:
                    rows, point_flag = fut.result()
                except NumericalFailure as exc:
                    if not quiet:
                        print(f"numerical failure: {exc}", file=sys.stderr)
                    exit_code = EXIT_NUMERICAL
                    continue
                flagged |= point_flag
                for row in rows:
                    fh.write(row.to_csv() + "\n")
                    all_rows.append(row)
                fh.flush()
                if not quiet:
                    print(f"{spec.swept_parameter}={v}: {len(rows)} rows")
    if exit_code == EXIT_OK and flagged:
        exit_code = EXIT_NONSTATIONARY
    return SweepResult(spec=spec, rows=tuple(all_rows)), exit_code


def read_csv(path: str) -> list[SweepRow]:
    """Re-read a sweep CSV into rows (loss-free for the written digits)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header: {header!r}")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 9:
                raise ConfigError(f"malformed CSV row: {line!r}")
            rows.append(SweepRow(
                swept_param=parts[0], swept_value=parts[1],
                load_model=int(parts[2]), device_mode=parts[3],
                engine=parts[4], metric=parts[5], value=float(parts[6]),
                stderr=None if parts[7] == "" else float(parts[7]),
                runtime_s=float(parts[8])))
    return rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="paoi-lab",
        description="Mean peak-age-of-information sweeps for a UAV-assisted "
                    "IoT uplink (analytic and Monte-Carlo engines).")
    p.add_argument("--config", help="flat dotted-key config file")
    p.add_argument("--preset", help="named preset (see --list-presets)")
    p.add_argument("--list-presets", action="store_true",
                   help="print available preset names and exit")
    p.add_argument("--out", help="output CSV path (overrides config)")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--realizations", type=int, default=100,
                   help="Monte-Carlo realizations per grid point")
    p.add_argument("--slots", type=int, default=1000,
                   help="slots per realization")
    p.add_argument("--engines", help="comma list overriding the spec engines")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list_presets:
        for name in list_presets():
            print(name)
        return EXIT_OK
    try:
        if args.preset is not None:
            if args.preset not in PRESETS:
                raise ConfigError(f"unknown preset {args.preset!r}; "
                                  f"choose from {list_presets()}")
            cfg = dict(PRESETS[args.preset])
        elif args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config_text(fh.read())
        else:
            raise ConfigError("one of --config or --preset is required")
        spec = build_spec(cfg)
        if args.engines:
            spec = replace(spec, engines=tuple(_split_list(args.engines)))
            spec.validate()
        if args.out:
            spec = replace(spec, output_path=args.out)
        base_fields, env = build_scenario(cfg)
        # construct once up front so invariant violations exit before work
        _scenario_at(base_fields, env, spec.swept_parameter, spec.grid[0])
    except (ConfigError, ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _, code = run_sweep(spec, base_fields, env, seed=args.seed,
                            realizations=args.realizations, slots=args.slots,
                            quiet=args.quiet)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
