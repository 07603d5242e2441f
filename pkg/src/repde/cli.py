"""Command-line entry point.

Subcommands::

    repde run      --config cfg.toml --out DIR
    repde converge --config cfg.toml --levels K [--out DIR]
    repde sweep    --config cfg.toml --param NAME --values a,b,c --out DIR
                   [--workers N]
    repde predict  --scenario NAME --dim N --tmax T [--gamma G] [--beta B]
                   [--eps-slack E] [--count K] [--out FILE]

Exit codes: 0 success, 2 malformed config or usage, 1 runtime failure.
Config files are flat TOML; the schema is documented in
:mod:`repde.config`.  Family strings follow::

    family     = kind ":" param ("," param)*
    kind       = "algebraic" | "exponential" | "doubly_exponential"
               | "separable"
    param      = name "=" number

e.g. ``algebraic:c0=1,gamma=4`` or ``exponential:alpha=0.5,beta=2``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, bundled_config, load_config
from .harness import converge, predict_table, run, sweep


def resolve_config(value: str):
    """A path to a TOML file, or the name of a bundled config."""
    path = Path(value)
    if path.is_file() or value.endswith(".toml") or "/" in value:
        return load_config(path)
    return bundled_config(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repde",
        description=(
            "Numerical laboratory for unit-mass solutions of "
            "u_t = u lap(u) + u int |grad u|^2 and the growth laws of the "
            "cumulated energy."
        ),
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment pipeline")
    p_run.add_argument(
        "--config", required=True, help="flat TOML config file or bundled name"
    )
    p_run.add_argument("--out", required=True, help="output directory")

    p_conv = sub.add_parser("converge", help="(dr, ds) refinement study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--levels", type=int, required=True)
    p_conv.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sweep", help="run experiments over a parameter list")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=1)

    p_pred = sub.add_parser("predict", help="closed-form prediction tables")
    p_pred.add_argument(
        "--scenario",
        required=True,
        choices=["algebraic", "exponential", "doubly_exponential"],
    )
    p_pred.add_argument("--dim", type=int, required=True)
    p_pred.add_argument("--tmax", type=float, required=True)
    p_pred.add_argument("--gamma", type=float, default=None)
    p_pred.add_argument("--beta", type=float, default=None)
    p_pred.add_argument("--eps-slack", type=float, default=0.25)
    p_pred.add_argument("--count", type=int, default=50)
    p_pred.add_argument("--out", default=None, help="CSV file (default: stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = resolve_config(args.config)
            report = run(cfg, args.out)
            print(f"verdict: {report.verdict}")
            fitted = report.fitted
            if "value" in fitted:
                print(
                    f"fitted {fitted['kind']}: {fitted['value']:.4f} "
                    f"(r^2 = {fitted['r_squared']:.4f})"
                )
            print(f"report: {Path(args.out) / 'report.json'}")
        elif args.command == "converge":
            cfg = resolve_config(args.config)
            summary = converge(cfg, args.levels, args.out)
            for row in summary["rows"]:
                print(
                    f"level {row['level']}: intervals={row['intervals']} "
                    f"linf={row['linf_error']:.3e} order={row['order']:.2f}"
                )
            print(json.dumps(summary["residual_orders"], indent=2))
        elif args.command == "sweep":
            cfg = resolve_config(args.config)
            values = [float(v) for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("sweep needs a nonempty --values list")
            summary = sweep(cfg, args.param, values, args.out, workers=args.workers)
            for entry in summary["entries"]:
                status = entry["error"] or entry["verdict"]
                print(
                    f"{args.param}={entry['value']:g}: "
                    f"fitted={entry['fitted_value']:.4f} ({status})"
                )
            print(f"strictly increasing: {summary['strictly_increasing']}")
        elif args.command == "predict":
            header, data = predict_table(
                args.scenario,
                args.dim,
                args.tmax,
                count=args.count,
                gamma=args.gamma,
                beta=args.beta,
                eps=args.eps_slack,
            )
            lines = [",".join(header)]
            lines += [",".join(f"{x:.17g}" for x in row) for row in data]
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pipeline failures: nonzero, with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
