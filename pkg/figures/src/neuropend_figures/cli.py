"""Command line entry point: one figure per invocation."""
from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, INPUT_SIGNATURES, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neuropend-figures",
        description="Render a figure from neuropend CSV outputs")
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument("--input", action="append", default=[],
                        help="input CSV path (repeatable, order matters)")
    parser.add_argument("--out", required=True, help="output SVG path")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(figure_id=args.figure, inputs=tuple(args.input),
                          output=args.out)
        render(spec)
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        need, sig = INPUT_SIGNATURES[args.figure]
        print(f"error: {exc}\n{args.figure} inputs: {sig}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
