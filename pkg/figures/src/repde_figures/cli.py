"""CLI: render one figure from a repde output directory.

    repde-figures --in DIR --kind KIND --out FILE

KIND is one of E_vs_logt, E_vs_t_loglog, decay_Ls, convergence,
sweep_summary; the output format follows the file extension (png, svg,
pdf).  Exit codes: 0 success, 1 missing/ill-formed inputs, 2 usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .readers import SchemaError
from .render import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repde-figures",
        description="Render figures from repde CSV/JSON outputs.",
    )
    parser.add_argument("--in", dest="input_dir", required=True, help="experiment output directory")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="figure file (png/svg/pdf)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            input_dir=Path(args.input_dir), kind=args.kind, out_path=Path(args.out)
        )
        out = render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
