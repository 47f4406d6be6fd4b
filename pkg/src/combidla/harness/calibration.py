"""Measured constants consumed by the bound evaluators.

The theory proves existence of these constants but gives no values, so they
are measured as extremes over a grid and stored in a JSON file.
"""

from __future__ import annotations

import math
import os
from datetime import datetime, timezone

import numpy as np

from .. import flashing as fl
from .. import harmonic as hm
from .. import sandpile as sp
from ..lattice import Region

# density parameter for the tentacle experiment: d(5) = 57 < 0.15 * 8^3
DEFAULT_BETA = 0.15

KAPPA_A_GRID = (10.0, 20.0, 40.0, 80.0)
KAPPA_III_GRID = (6.0, 12.0)
G2_GRID = (6.0, 12.0, 24.0, 48.0)
FLASH_GRID = (8.0, 12.0, 16.0, 24.0)


def measure_kappa_a(grid=KAPPA_A_GRID) -> float:
    """Infimum of u(0) (rho / (rho - x))^2 over 0 <= x < rho - 1."""
    best = math.inf
    for rho in grid:
        r = Region(rho)
        for x in range(0, r.xmax):
            if not x < rho - 1:
                continue
            u = hm.hitting_prob_axis(r, x)
            best = min(best, float(u) * (rho / (rho - x)) ** 2)
    return best


def measure_kappa_iii(grid=KAPPA_III_GRID) -> float:
    """Smallest constant making the case (iii) estimate dominate the exact exit law."""
    best = 0.0
    for rho in grid:
        r = Region(rho)
        sites = list(r.sites())
        for z in r.boundary():
            h = hm.exit_field(r, z)
            for w in sites:
                if hm.green_bound_case(w, z) != "iii":
                    continue
                _, shape = hm.green_case_bound(w, z, r, 1.0, 1.0)
                if shape > 0:
                    best = max(best, h.value(w) / shape)
    return best


def measure_g2(grid=G2_GRID) -> tuple[float, float]:
    lo, hi = math.inf, 0.0
    for rho in grid:
        _, _, ratio = hm.g2_sums(Region(rho))
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
    return lo, hi


def measure_flash(grid=FLASH_GRID) -> tuple[float, float]:
    lo, hi = math.inf, 0.0
    for rho in grid:
        a, b = fl.flash_distribution_exact(rho).bounds()
        lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def timestamp() -> str:
    """ISO time from SOURCE_DATE_EPOCH (0 when unset) so the file is reproducible."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


def calibrate() -> dict:
    c_g2, C_g2 = measure_g2()
    k_lo, k_hi = measure_flash()
    return {
        "kappa_a": measure_kappa_a(),
        "kappa_iii": measure_kappa_iii(),
        "c_G2": c_g2,
        "C_G2": C_g2,
        "rho_grid": sorted(set(KAPPA_A_GRID) | set(KAPPA_III_GRID) | set(G2_GRID)),
        "K": 2.0 * sp.obstacle_sup_on_boundary(20)[0],
        "kappa_lo": k_lo,
        "kappa_hi": k_hi,
        "kappa_hi_ceiling": 27.0 / 4.0,
        "alpha": fl.volume_constant(),
        "beta": DEFAULT_BETA,
        "timestamp": timestamp(),
    }


def check(cal: dict) -> dict[str, bool]:
    return {
        "kappa_a_positive": cal["kappa_a"] > 0,
        "g2_band": 0 < cal["c_G2"] and cal["C_G2"] / cal["c_G2"] < 20,
        "flash_ceiling": cal["kappa_hi"] <= cal["kappa_hi_ceiling"],
        "finite": all(np.isfinite(v) for k, v in cal.items() if isinstance(v, float)),
    }
