"""``figures <kind> --in DIR --out DIR``: render solver artifacts."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import HashMismatchError
from .render import FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render 2D spectra maps, lattice sketches, and "
                    "bath-coordinate panel grids from solver output.")
    parser.add_argument("kind", choices=("spectra2d", "lattice", "bathcoords"))
    parser.add_argument("--in", dest="in_dir", required=True)
    parser.add_argument("--out", dest="out_dir", required=True)
    parser.add_argument("--elements", default="gg,ee",
                        help="matrix elements to plot in bathcoords panels")
    args = parser.parse_args(argv)

    spec = FigureSpec(in_dir=Path(args.in_dir), out_dir=Path(args.out_dir),
                      kind=args.kind,
                      elements=tuple(args.elements.split(",")))
    try:
        written = render(spec)
    except HashMismatchError as exc:
        print(f"refusing to render: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
