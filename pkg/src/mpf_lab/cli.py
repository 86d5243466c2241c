"""Command-line entry point.

Subcommands map one-to-one onto the experiment scenarios; every run prints a
CSV document (or writes it with --out) whose header comments contain the
schema version and the fully resolved configuration, so outputs are
self-describing and reproducible from their own header.

Exit codes: 0 success, 2 invalid configuration, 3 resource cap exceeded,
4 solver or numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import NumericalDegeneracyError, ResourceLimitError, SolverError
from .experiments import SCENARIOS, parse_config_text, resolve_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_SOLVER = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpf-lab",
        description="product-formula and multi-product-formula experiments",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, schema in SCENARIOS.items():
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", type=Path, default=None,
                       help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--out", type=str, default="-",
                       help="output CSV path ('-' for stdout)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for grid scenarios")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override any config key "
                            f"(valid: {', '.join(sorted(schema))})")
    return parser


def _collect_overrides(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in pairs:
        if "=" not in item:
            raise ValueError(f"override must look like KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        sources = []
        if args.config is not None:
            sources.append(parse_config_text(args.config.read_text()))
        sources.append(_collect_overrides(args.overrides))
        if args.seed is not None:
            sources.append({"seed": str(args.seed)})
        cfg = resolve_config(args.scenario, *sources)
        doc, trajectory = run_scenario(args.scenario, cfg, threads=max(args.threads, 1))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (SolverError, NumericalDegeneracyError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.out == "-":
        sys.stdout.write(doc.text())
    else:
        Path(args.out).write_text(doc.text())
    if trajectory is not None:
        Path(cfg["trajectory_out"]).write_text(trajectory.text())
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
