"""Command line entry point: solve, sweep, predict, verify and renorm subcommands."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .core import ConfigurationError
from .special import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinned-gl", description="Pinned Ginzburg-Landau vortex experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep", "predict"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out", default=None, help="output root (default from config, else runs/)")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--resolution-override", type=int, default=None, metavar="N")
    s = sub.add_parser("verify")
    s.add_argument("records", nargs="+")
    s.add_argument("--threshold", type=float, default=0.1)
    s = sub.add_parser("renorm")
    s.add_argument("--config", required=True)
    return p


def _summary(rec: dict) -> dict:
    keep = ("kind", "config_hash", "case", "predicted", "tied", "comparison", "max_distance",
            "within_threshold", "result", "prediction")
    out = {k: rec[k] for k in keep if k in rec}
    if "vortices" in rec:
        out["zeros"] = len(rec["vortices"]["zeros"])
        out["per_inclusion"] = rec["vortices"]["per_inclusion"]
        out["F"] = rec["F"]["total"]["value"]
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    from . import experiment as X

    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("solve", "sweep", "predict"):
            fn = {"solve": X.cmd_solve, "sweep": X.cmd_sweep, "predict": X.cmd_predict}[args.command]
            rec = fn(args.config, out=args.out, seed=args.seed,
                     resolution_override=args.resolution_override, threads=args.threads)
        elif args.command == "verify":
            rec = X.cmd_verify(args.records, args.threshold)
        else:
            rec = X.cmd_renorm(args.config)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(json.dumps(_summary(rec), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
