"""Flashing times and flashing explorers.

A flashing time for D(rho) draws a radius R with density 3r^2/rho^3 on
[0, rho]; if R < 1/2 the walk flashes at the origin at once, otherwise it
flashes where it first leaves D(R).  The flash site is nearly uniform on
D(rho).

The exact flash law is an integral over r of exit laws of D(r).  The site
set of D(r) only changes at the radii Rbar(z), so between consecutive
breakpoints the exit law is constant and the integral is a finite sum of
exit laws weighted by (b^3 - a^3)/rho^3.

A flashing explorer at scale h walks freely; the first time it reaches the
centre Z_i of the i-th translated domain D(Z_i, h) it runs a flashing time
around that domain and settles if the flash site is outside the explored set
V.  Domains are visited in order along the axis and the walk must leave
D(Z_i, R_i) before reaching Z_{i+1}, so by the strong Markov property the
flashes are independent and the crossing probability is the product of the
per-domain probabilities of flashing inside V.  The simulation samples each
flash with the walk kernel; the product is computed exactly as a check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numba import njit

from . import _kernels as K
from .harmonic import _axis_exit_probs
from .lattice import ORIGIN, Region, Site, rbar
from .stats import StatResult, wilson

EXACT_CAP = 30.0


@dataclass(frozen=True)
class FlashSample:
    radius: float
    site: Site
    at_origin: bool


@njit(cache=True)
def _sample_flashes(rho, count, rng):
    half = int(math.ceil(rho)) + 1
    w = 2 * half + 1
    up = np.zeros(w, np.int64)
    dn = np.zeros(w, np.int64)
    ptr = np.zeros(w + 1, np.int64)
    sy = np.zeros(0, np.int64)
    son = np.zeros(0, np.bool_)
    rs = np.empty(count)
    xs = np.zeros(count, np.int64)
    ys = np.zeros(count, np.int64)
    for i in range(count):
        r = rho * rng.random() ** (1.0 / 3.0)
        rs[i] = r
        if r < 0.5:
            continue
        xmax = int(math.ceil(r)) - 1
        for x in range(-xmax, xmax + 1):
            dx = r - abs(x)
            t = int(math.ceil(dx * dx / 3.0)) - 1
            up[x + half] = t
            dn[x + half] = t
        ex, ey, _, _ = K.walk_shortcut(0, 0, -xmax, xmax, up, dn, half, ptr, sy, son, False, rng)
        xs[i] = ex
        ys[i] = ey
    return rs, xs, ys


def sample_flashes(rho: float, count: int, rng: np.random.Generator):
    """Radii and flash sites of ``count`` independent flashing times for D(rho)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return _sample_flashes(float(rho), int(count), rng)


def sample_flash(rho: float, rng: np.random.Generator) -> FlashSample:
    rs, xs, ys = sample_flashes(rho, 1, rng)
    r = float(rs[0])
    return FlashSample(r, Site(int(xs[0]), int(ys[0])), r < 0.5)


def flash_radius(rho: float, u: float) -> float:
    """Inverse of the radius CDF (r/rho)^3."""
    return rho * u ** (1.0 / 3.0)


@dataclass
class FlashDistribution:
    rho: float
    probs: dict[Site, float]
    samples: int | None = None

    @property
    def region(self) -> Region:
        return Region(self.rho)

    def scaled(self) -> dict[Site, float]:
        """|D(rho)| P(z) for every z in D(rho)."""
        r = self.region
        return {z: r.volume * self.probs.get(z, 0.0) for z in r.sites()}

    @property
    def uniformity_ratio(self) -> float:
        vals = list(self.scaled().values())
        lo = min(vals)
        return math.inf if lo == 0 else max(vals) / lo

    def bounds(self) -> tuple[float, float]:
        vals = list(self.scaled().values())
        return min(vals), max(vals)

    def total(self) -> float:
        return math.fsum(self.probs.values())


def _breakpoints(rho: float) -> list[float]:
    r = Region(rho)
    pts = set(r.sites()) | set(r.boundary())
    vals = sorted({rbar(z) for z in pts if 0.5 < rbar(z) < rho} | {0.5, rho})
    out = [vals[0]]
    for v in vals[1:]:
        if v - out[-1] > 1e-9:
            out.append(v)
    return out


def flash_distribution_exact(rho: float) -> FlashDistribution:
    if not 0.5 < rho <= EXACT_CAP:
        raise ValueError(f"exact mode needs 1/2 < rho <= {EXACT_CAP}")
    probs: dict[Site, float] = {ORIGIN: 1.0 / (2.0 * rho) ** 3}
    cube = rho ** 3
    b = _breakpoints(rho)
    for a, c in zip(b[:-1], b[1:]):
        wgt = (c ** 3 - a ** 3) / cube
        for z, p in _axis_exit_probs(Region(0.5 * (a + c)), 0).items():
            probs[z] = probs.get(z, 0.0) + p * wgt
    return FlashDistribution(rho, dict(sorted(probs.items())))


def flash_distribution_mc(rho: float, samples: int, rng: np.random.Generator) -> FlashDistribution:
    _, xs, ys = sample_flashes(rho, samples, rng)
    pairs, counts = np.unique(np.stack([xs, ys], axis=1), axis=0, return_counts=True)
    probs = {Site(int(a), int(b)): c / samples for (a, b), c in zip(pairs, counts)}
    return FlashDistribution(rho, probs, samples)


def flash_distribution(rho: float, mode: str = "exact", rng: np.random.Generator | None = None,
                       samples: int = 10**6) -> FlashDistribution:
    if mode == "exact":
        return flash_distribution_exact(rho)
    if mode == "monteCarlo":
        if rng is None:
            raise ValueError("Monte Carlo mode needs a random stream")
        return flash_distribution_mc(rho, samples, rng)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# flashing explorers


def volume_constant(hmin: float = 1.0, hmax: float = 60.0, step: float = 0.25) -> float:
    """Smallest |D(h)|/h^3 over the grid h in [hmin, hmax] (approaching each jump from the left)."""
    best = math.inf
    h = hmin
    while h <= hmax + 1e-12:
        for v in (h, h - 1e-9 if h > hmin else h):
            best = min(best, Region(v).volume / v ** 3)
        h += step
    return best


def optimal_scale(volume_v: int, R: int, beta: float, alpha: float) -> float:
    """Scale maximising R/(2h) - |V|/(beta alpha h^3)."""
    return math.sqrt(6.0 / (beta * alpha)) * math.sqrt(volume_v / R)


def translated_contains(center: int, h: float, z: tuple[int, int]) -> bool:
    return (z[0] - center, z[1]) in Region(h)


@dataclass
class ScaleDecomposition:
    h: int
    R: int
    centers: list[int]
    well_covered: list[int]
    overlap: list[int] = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.centers)


def scale_decomposition(V: Iterable[tuple[int, int]], R: int, h: int, beta: float) -> ScaleDecomposition:
    """Centres Z_i = (2(i-1)h + h, 0), i = 1..floor(R/2h), and the well-covered indices.

    The scale is an integer so that every centre is a lattice site.
    """
    if h < 1 or h != int(h):
        raise ValueError("scale must be a positive integer")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    h = int(h)
    vs = {Site(int(x), int(y)) for x, y in V}
    m = R // (2 * h)
    centers = [2 * i * h + h for i in range(m)]
    base = list(Region(h).sites())
    vol = len(base)
    overlap = [sum(1 for z in base if (z.x + c, z.y) in vs) for c in centers]
    gamma = [i + 1 for i, k in enumerate(overlap) if k > beta * vol]
    return ScaleDecomposition(h, R, centers, gamma, overlap)


@dataclass
class CrossingResult:
    stat: StatResult
    decomposition: ScaleDecomposition
    domain_probs: list[float]
    exact: float
    h_star: float
    alpha: float
    bound_product: float
    bound_exponential: float
    bound_volume: float | None
    vacuous: bool


def crossing_experiment(R: int, V: Iterable[tuple[int, int]], h: int, beta: float, replicas: int,
                        rng: np.random.Generator, a3: float | None = None,
                        kappa3: float | None = None) -> CrossingResult:
    """Fraction of flashing explorers (scale h) that reach (R, 0) without settling outside V."""
    vs = {Site(int(x), int(y)) for x, y in V}
    if ORIGIN not in vs or Site(R, 0) not in vs:
        raise ValueError("V must contain (0, 0) and (R, 0)")
    if not 1 <= h <= R / 2:
        raise ValueError("scale must satisfy 1 <= h <= R/2")
    dec = scale_decomposition(vs, R, h, beta)
    flash = flash_distribution_exact(float(h)) if h > 0.5 else None
    vcodes = np.array(sorted(z.x * 1_000_003 + z.y for z in vs), dtype=np.int64)
    domain_probs = []
    alive = np.ones(replicas, bool)
    for c in dec.centers:
        domain_probs.append(math.fsum(p for z, p in flash.probs.items() if (z.x + c, z.y) in vs))
        _, xs, ys = sample_flashes(float(h), replicas, rng)
        codes = (xs + c) * 1_000_003 + ys
        alive &= np.isin(codes, vcodes)
    hits = int(alive.sum())
    stat = wilson(hits, replicas, "flashing-explorer crossing")
    exact = math.prod(domain_probs)
    alpha = volume_constant()
    h_star = optimal_scale(len(vs), R, beta, alpha)
    outside = [p for i, p in enumerate(domain_probs, start=1) if i not in dec.well_covered]
    b_prod = math.prod(outside)
    q = max(outside) if outside else 1.0
    expo = dec.M - len(vs) / (beta * Region(h).volume)
    b_exp = math.exp(-math.log(1.0 / q) * expo) if q > 0 else 0.0
    b_vol = None
    if a3 is not None and kappa3 is not None:
        b_vol = math.exp(a3 - kappa3 * math.sqrt(R ** 3 / len(vs)))
    vacuous = b_exp >= 1.0 or (b_vol is not None and b_vol >= 1.0)
    return CrossingResult(stat, dec, domain_probs, exact, h_star, alpha, b_prod, b_exp, b_vol, vacuous)
