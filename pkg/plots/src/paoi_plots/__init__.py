"""Chart rendering for paoi-lab sweep CSVs.

Consumes only the published CSV schema; it has no dependency on the sweep
tool's internals.
"""

from .render import (CSV_COLUMNS, PlotRecipe, RecipeError, RenderSummary,
                     built_in_recipes, load_recipe, read_rows, render)

__all__ = [
    "CSV_COLUMNS",
    "PlotRecipe",
    "RecipeError",
    "RenderSummary",
    "built_in_recipes",
    "load_recipe",
    "read_rows",
    "render",
]
