"""Command-line entry point: ``paoi-plots render --csv ... --recipe ... --out ...``."""

from __future__ import annotations

import argparse
import sys

from .render import RecipeError, built_in_recipes, load_recipe, render

EXIT_OK = 0
EXIT_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="paoi-plots",
        description="Render paoi-lab sweep CSVs into figure-style charts.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one CSV with a recipe")
    r.add_argument("--csv", required=True, help="sweep CSV path")
    r.add_argument("--recipe", required=True,
                   help=f"built-in name ({', '.join(built_in_recipes())}) "
                        f"or JSON recipe file")
    r.add_argument("--out", required=True, help="output image path (.png)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        recipe = load_recipe(args.recipe, input_csv=args.csv,
                             output_path=args.out)
        summary = render(recipe)
    except (RecipeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {summary.output_path}: {len(summary.series)} series "
          f"({', '.join(f'{k}: {v} pts' for k, v in sorted(summary.series.items()))})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
