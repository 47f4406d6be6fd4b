"""Command line entry point: ``comb-idla <experiment> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import KINDS, ExperimentConfig, run_experiment

log = logging.getLogger("combidla")

SUBCOMMANDS = KINDS + ("all",)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="comb-idla", description="IDLA and sandpile experiments on the comb")
    ap.add_argument("experiment", choices=SUBCOMMANDS)
    ap.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    ap.add_argument("--replicas", type=int, default=None)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--config", default=None, help="JSON file with params/seed/replicas")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for replicas")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _config(kind: str, args, file_cfg: dict) -> ExperimentConfig:
    """Flat config for a single experiment; for ``all``, sections keyed by kind plus an optional seed."""
    if args.experiment == "all":
        data = dict(file_cfg.get(kind, {}))
        if "seed" in file_cfg:
            data.setdefault("seed", file_cfg["seed"])
    else:
        data = dict(file_cfg)
    if data.pop("kind", kind) != kind:
        raise ValueError(f"config file is not for {kind!r}")
    extra = set(data) - {"params", "seed", "replicas"}
    if extra:
        raise ValueError(f"unknown config fields: {sorted(extra)}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.replicas is not None:
        data["replicas"] = args.replicas
    return ExperimentConfig(kind=kind, out=args.out, threads=args.threads, **data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        kinds = KINDS if args.experiment == "all" else (args.experiment,)
        cfgs = [_config(k, args, file_cfg) for k in kinds]
    except (OSError, ValueError, TypeError) as exc:
        print(f"comb-idla: usage error: {exc}", file=sys.stderr)
        return 2
    failed = []
    for cfg in cfgs:
        res = run_experiment(cfg)
        if not res.passed:
            failed.append(f"{cfg.kind}: {', '.join(res.failures())}")
    for line in failed:
        print(f"FAILED {line}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
