"""Render sweep CSVs into figure-style charts.

The input contract is the sweep tool's published CSV schema::

    swept_param,swept_value,load_model,device_mode,engine,metric,value,stderr,runtime_s

One line is drawn per (load_model, device_mode, engine) group: analytic
series as lines, simulation series as markers with error bars.  Styling is a
deterministic function of the group key, so re-rendering the same CSV with
the same recipe reproduces the same image.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

CSV_COLUMNS = ("swept_param", "swept_value", "load_model", "device_mode",
               "engine", "metric", "value", "stderr", "runtime_s")

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_MARKERS = ("o", "s", "^", "D", "v", "P", "X", "*")


class RecipeError(ValueError):
    """Invalid recipe or CSV that does not match the published schema."""


@dataclass(frozen=True)
class PlotRecipe:
    input_csv: str
    x_column: str = "swept_value"
    y_column: str = "value"
    group_columns: tuple = ("load_model", "device_mode", "engine")
    error_column: str | None = "stderr"
    output_path: str = "figure.png"
    metric: str | None = None          # keep only rows with this metric
    x_label: str | None = None
    y_label: str | None = None
    title: str | None = None
    log_x: bool = False
    log_y: bool = False

    def validate(self) -> None:
        for col in (self.x_column, self.y_column, *self.group_columns):
            if col not in CSV_COLUMNS:
                raise RecipeError(f"unknown column {col!r}; schema columns are "
                                  f"{CSV_COLUMNS}")
        if self.error_column is not None and self.error_column not in CSV_COLUMNS:
            raise RecipeError(f"unknown error column {self.error_column!r}")


@dataclass(frozen=True)
class RenderSummary:
    """Structural description of a rendered chart, for golden comparisons."""
    output_path: str
    series: dict                     # group label -> number of points
    x_label: str
    y_label: str
    skipped_groups: tuple = ()

    def structure(self) -> dict:
        return {
            "series_count": len(self.series),
            "points_per_series": dict(sorted(self.series.items())),
            "x_label": self.x_label,
            "y_label": self.y_label,
        }


def read_rows(path: str) -> list[dict]:
    """Read a sweep CSV, enforcing the published header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecipeError(f"{path}: empty file") from None
        if tuple(header) != CSV_COLUMNS:
            raise RecipeError(f"{path}: header {header!r} does not match the "
                              f"sweep schema {CSV_COLUMNS}")
        rows = []
        for lineno, parts in enumerate(reader, start=2):
            if len(parts) != len(CSV_COLUMNS):
                raise RecipeError(f"{path}:{lineno}: expected "
                                  f"{len(CSV_COLUMNS)} fields, got {len(parts)}")
            rows.append(dict(zip(CSV_COLUMNS, parts)))
    return rows


def _as_float(text: str) -> float:
    if text == "":
        return math.nan
    return float(text)


def _group_label(row: dict, group_columns: tuple) -> str:
    return "/".join(str(row[c]) for c in group_columns)


def _style(label: str) -> tuple[str, str]:
    digest = hashlib.sha256(label.encode()).digest()
    return _COLORS[digest[0] % len(_COLORS)], _MARKERS[digest[1] % len(_MARKERS)]


def render(recipe: PlotRecipe) -> RenderSummary:
    """Render the recipe to ``recipe.output_path`` and return the chart
    structure."""
    recipe.validate()
    rows = read_rows(recipe.input_csv)
    if recipe.metric is not None:
        rows = [r for r in rows if r["metric"] == recipe.metric]
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(_group_label(row, recipe.group_columns), []).append(row)

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    series: dict[str, int] = {}
    skipped = []
    for label in sorted(groups):
        pts = [(float(r[recipe.x_column]), _as_float(r[recipe.y_column]),
                _as_float(r[recipe.error_column]) if recipe.error_column else math.nan)
               for r in groups[label]]
        pts = [p for p in pts if math.isfinite(p[1])]
        if not pts:
            skipped.append(label)
            warnings.warn(f"group {label!r} has no finite points; skipped")
            continue
        pts.sort()
        xs, ys, es = zip(*pts)
        color, marker = _style(label)
        is_simulation = "simulation" in label.split("/")
        if is_simulation:
            errs = [0.0 if not math.isfinite(e) else e for e in es]
            ax.errorbar(xs, ys, yerr=errs, fmt=marker, color=color,
                        linestyle="none", capsize=3, label=label)
        else:
            ax.plot(xs, ys, color=color, linestyle="-",
                    marker=marker if len(xs) == 1 else "",
                    label=label)
        series[label] = len(xs)

    x_label = recipe.x_label or (rows[0]["swept_param"] if rows else recipe.x_column)
    metrics = sorted({r["metric"] for r in rows})
    y_label = recipe.y_label or (metrics[0] if len(metrics) == 1 else recipe.y_column)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if recipe.title:
        ax.set_title(recipe.title)
    if recipe.log_x:
        ax.set_xscale("log")
    if recipe.log_y:
        ax.set_yscale("log")
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(recipe.output_path)
    plt.close(fig)
    return RenderSummary(output_path=recipe.output_path, series=series,
                         x_label=x_label, y_label=y_label,
                         skipped_groups=tuple(skipped))


# ---------------------------------------------------------------------------
# recipes
# ---------------------------------------------------------------------------

_BUILT_INS: dict[str, dict] = {
    "activity-vs-load": {
        "metric": "activity",
        "x_label": "arrival rate per slot",
        "y_label": "mean activity probability",
    },
    "coverage-vs-load": {
        "metric": "coverage",
        "x_label": "arrival rate per slot",
        "y_label": "coverage probability",
    },
    "paoi-vs-devices": {
        "metric": "mean_paoi",
        "x_label": "devices per cluster",
        "y_label": "mean peak AoI (slots)",
    },
}

# the figure presets map onto the generic recipes
_BUILT_INS["fig5a"] = dict(_BUILT_INS["activity-vs-load"],
                           title="suburban activity, analytic vs simulation")
_BUILT_INS["fig5b"] = dict(_BUILT_INS["activity-vs-load"],
                           title="urban activity, analytic vs simulation")
_BUILT_INS["fig6a"] = dict(_BUILT_INS["coverage-vs-load"])
_BUILT_INS["fig6b"] = dict(_BUILT_INS["coverage-vs-load"],
                           x_label="UAV altitude (m)")
_BUILT_INS["fig7a"] = dict(_BUILT_INS["paoi-vs-devices"],
                           title="correlated devices, both load models")
_BUILT_INS["fig7b"] = dict(_BUILT_INS["paoi-vs-devices"])
_BUILT_INS["fig8a"] = dict(_BUILT_INS["paoi-vs-devices"])
_BUILT_INS["fig8b"] = dict(_BUILT_INS["paoi-vs-devices"])


def built_in_recipes() -> list[str]:
    return sorted(_BUILT_INS)


_RECIPE_FIELDS = {f for f in PlotRecipe.__dataclass_fields__}


def load_recipe(name_or_path: str, input_csv: str,
                output_path: str) -> PlotRecipe:
    """Resolve a built-in recipe name or a JSON recipe file."""
    if name_or_path in _BUILT_INS:
        fields = dict(_BUILT_INS[name_or_path])
    else:
        try:
            with open(name_or_path, encoding="utf-8") as fh:
                fields = json.load(fh)
        except FileNotFoundError:
            raise RecipeError(f"unknown recipe {name_or_path!r}: not a "
                              f"built-in ({built_in_recipes()}) and no such "
                              f"file") from None
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{name_or_path}: invalid JSON recipe: {exc}") from exc
        if not isinstance(fields, dict):
            raise RecipeError(f"{name_or_path}: recipe must be a JSON object")
        unknown = set(fields) - _RECIPE_FIELDS
        if unknown:
            raise RecipeError(f"{name_or_path}: unknown recipe fields {sorted(unknown)}")
        if "group_columns" in fields:
            fields["group_columns"] = tuple(fields["group_columns"])
    fields.pop("input_csv", None)
    fields.pop("output_path", None)
    recipe = PlotRecipe(input_csv=input_csv, output_path=output_path, **fields)
    recipe.validate()
    return recipe
