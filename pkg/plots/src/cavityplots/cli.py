"""Script entry point: render one figure from CSV artifacts."""
from __future__ import annotations

import argparse
import sys

from .recipes import FIGURES, FigureRecipe, SchemaError, render


def _parse_window(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cavitychaos-plot",
        description="Render figures from simulation CSV outputs.")
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES),
                        help="figure recipe to render")
    parser.add_argument("--inputs", required=True,
                        type=lambda s: tuple(s.split(",")),
                        help="comma-separated input CSV paths")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--zoom", type=_parse_window, action="append",
                        default=[],
                        help="zoom window lo:hi (repeatable; fig6/fig7)")
    args = parser.parse_args(argv)
    recipe = FigureRecipe(figure_id=args.figure, inputs=args.inputs,
                          output=args.out, zoom_windows=tuple(args.zoom))
    try:
        render(recipe)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
