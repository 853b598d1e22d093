"""Command-line entry point: render --figure figN --in results.csv --out figN.png"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .render import CsvFormatError, FigureSpec, TARGET_LEVELS, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a groupcp experiment CSV as a figure.",
    )
    parser.add_argument("--figure", required=True, choices=sorted(TARGET_LEVELS))
    parser.add_argument("--in", dest="input_csv", required=True, metavar="CSV")
    parser.add_argument("--out", dest="output_path", required=True, metavar="IMAGE")
    parser.add_argument(
        "--export-data",
        dest="export_path",
        metavar="JSON",
        help="also write the plotted coordinates as JSON (verification hook)",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        figure=args.figure,
        input_csv=args.input_csv,
        output_path=args.output_path,
        export_path=args.export_path,
    )
    try:
        render(spec)
    except (CsvFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    sys.exit(main())
