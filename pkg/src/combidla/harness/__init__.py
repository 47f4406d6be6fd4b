"""Experiment orchestration: configs, runners, calibration and flat-file outputs."""

from __future__ import annotations

import logging
from pathlib import Path

from .calibration import calibrate, check
from .config import KINDS, SCHEMA, ExperimentConfig
from .experiments import RUNNERS, ExperimentResult
from .output import read_csv, write_csv, write_json

log = logging.getLogger(__name__)

__all__ = ["ExperimentConfig", "ExperimentResult", "KINDS", "SCHEMA", "calibrate", "run_experiment",
           "read_csv", "write_csv", "write_json"]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one experiment and write its CSV tables, snapshots and JSON summary under cfg.out."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.kind.replace("-", "_")
    if cfg.kind == "calibrate":
        cal = calibrate()
        res = ExperimentResult(cfg.kind, summary=cal, soft=check(cal))
        write_json(out / "calibration.json", cal)
    else:
        res = RUNNERS[cfg.kind](cfg)
    for name, (cols, rows) in res.tables.items():
        fname = f"{stem}.csv" if name == stem else f"{stem}_{name}.csv"
        write_csv(out / fname, cols, rows, cfg.hash)
    for name, writer in res.snapshots.items():
        writer(str(out / f"{stem}_{name}.jsonl"))
    write_json(out / f"{stem}_summary.json", {
        "schema": SCHEMA, "config": cfg.identity(), "config_hash": cfg.hash, "passed": res.passed,
        "hard": res.hard, "soft": res.soft, "failures": res.failures(), "summary": res.summary,
    })
    level = logging.INFO if res.passed else logging.ERROR
    log.log(level, "%s: %s", cfg.kind, "pass" if res.passed else "FAIL " + ", ".join(res.failures()))
    return res
