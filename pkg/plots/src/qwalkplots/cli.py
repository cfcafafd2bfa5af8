"""qwalk-plot <figureKind> <inputDir...> -o <file>"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, PlotDataError, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qwalk-plot", description=__doc__)
    parser.add_argument("figure_kind", choices=FIGURE_KINDS)
    parser.add_argument("input_dirs", nargs="+", metavar="inputDir")
    parser.add_argument("-o", "--output", required=True, help="image file to write")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    job = PlotJob(args.figure_kind, tuple(Path(d) for d in args.input_dirs), Path(args.output))
    try:
        out = render(job)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
