"""Batch CLI: render one figure from experiment CSVs.

Exit codes: 0 success, 1 schema or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureRecipe, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conemark-plots", description="Render conemark figure analogues."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from its CSVs")
    p.add_argument("--figure", required=True, choices=list(FIGURE_IDS))
    p.add_argument("--inputs", nargs="+", required=True, help="input CSV paths")
    p.add_argument("--output", required=True, help="output path stem (gets .png and .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = render(
            FigureRecipe(figure_id=args.figure, inputs=tuple(args.inputs), output=args.output)
        )
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
