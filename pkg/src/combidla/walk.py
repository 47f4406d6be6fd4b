"""Simple random walk on the comb, with exact tooth-excursion shortcuts.

A walker that steps from the axis into a tooth whose first free height is H
reaches that height before returning to the base with probability 1/H
(gambler's ruin from 1 on {0..H}).  Shortcut mode resolves every tooth visit
with one such draw, so the cost of a walk is the number of axis steps.  In
shortcut mode ``step_count`` counts these events, not lattice steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from . import _kernels as K
from .lattice import Region, Site, degree, neighbors

Mode = Literal["naive", "shortcut"]


@dataclass
class WalkState:
    position: Site
    rng: np.random.Generator
    step_count: int = 0


def step(s: WalkState) -> WalkState:
    """Move to a uniformly chosen comb neighbor, using one draw."""
    nbrs = neighbors(s.position)
    k = int(s.rng.random() * degree(s.position))
    if s.position.y != 0:
        # order matches the compiled kernels: up with u < 1/2
        nbrs = [nbrs[1], nbrs[0]]
    else:
        nbrs = [nbrs[1], nbrs[0], nbrs[3], nbrs[2]]
    return WalkState(nbrs[k], s.rng, s.step_count + 1)


@dataclass(frozen=True)
class ExcursionOutcome:
    kind: Literal["returned", "absorbed"]
    h: int | None = None

    @property
    def absorbed(self) -> bool:
        return self.kind == "absorbed"


def tooth_excursion(absorb_height: int, rng: np.random.Generator) -> ExcursionOutcome:
    """Fate of a walker entering a tooth at height 1 with absorption at ``absorb_height``."""
    if absorb_height < 1:
        raise ValueError("absorbing height must be at least 1")
    if rng.random() * absorb_height < 1.0:
        return ExcursionOutcome("absorbed", absorb_height)
    return ExcursionOutcome("returned")


def excursion_hits(absorb_height: int, count: int, rng: np.random.Generator) -> int:
    """Number of absorbed outcomes among ``count`` excursions."""
    if absorb_height < 1:
        raise ValueError("absorbing height must be at least 1")
    return int(K.sample_excursions(absorb_height, count, rng))


@dataclass
class Occupancy:
    """Interval encoding of a parent-closed site set, as consumed by the kernels."""

    lo: int
    hi: int
    up: np.ndarray
    dn: np.ndarray
    off: int

    @classmethod
    def of_region(cls, r: Region) -> "Occupancy":
        h = r.heights.copy()
        return cls(-r.xmax, r.xmax, h, h.copy(), r.xmax)

    @property
    def ncols(self) -> int:
        return self.up.shape[0]


@dataclass
class StopSet:
    """Stop sites in per-column CSR form aligned with an Occupancy's columns."""

    ptr: np.ndarray
    sy: np.ndarray
    son: np.ndarray
    sites: list[Site] = field(default_factory=list)

    @classmethod
    def build(cls, sites: Iterable[tuple[int, int]], off: int, ncols: int) -> "StopSet":
        ordered = sorted({Site(int(x), int(y)) for x, y in sites})
        buckets: list[list[int]] = [[] for _ in range(ncols)]
        kept = []
        for z in ordered:
            c = z.x + off
            if 0 <= c < ncols:
                buckets[c].append(z.y)
                kept.append(z)
            else:
                raise ValueError(f"stop site {z} outside the encoded columns")
        ptr = np.zeros(ncols + 1, np.int64)
        ptr[1:] = np.cumsum([len(b) for b in buckets])
        sy = np.asarray([y for b in buckets for y in b], dtype=np.int64)
        son = np.ones(sy.shape[0], dtype=np.bool_)
        return cls(ptr, sy, son, kept)

    @classmethod
    def empty(cls, ncols: int) -> "StopSet":
        return cls(np.zeros(ncols + 1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.bool_))

    def hit_sites(self) -> set[Site]:
        # CSR order equals sorted order, which is how ``sites`` was built
        return {z for z, on in zip(self.sites, self.son.tolist()) if not on}


def _check_start(start: tuple[int, int], r: Region) -> Site:
    z = Site(int(start[0]), int(start[1]))
    if z not in r:
        raise ValueError(f"start {z} not in D({r.rho})")
    return z


def run_until_exit(
    start: tuple[int, int],
    r: Region,
    mode: Mode,
    rng: np.random.Generator,
    targets: Iterable[tuple[int, int]] | None = None,
) -> tuple[Site, dict[Site, bool] | None]:
    """First site outside D(rho) visited by a walk from ``start``.

    If ``targets`` is given, also report for each target whether it was hit at
    a time >= 1 before the exit.
    """
    z = _check_start(start, r)
    occ = Occupancy.of_region(r)
    stops = StopSet.build(targets or (), occ.off, occ.ncols)
    x, y, code, _ = K.walk(z.x, z.y, occ.lo, occ.hi, occ.up, occ.dn, occ.off,
                           stops.ptr, stops.sy, stops.son, True, mode == "naive", rng)
    hits = None
    if targets is not None:
        hit = stops.hit_sites()
        hits = {t: t in hit for t in stops.sites}
    return Site(int(x), int(y)), hits


def hit_before_exit(start: tuple[int, int], target: tuple[int, int], r: Region,
                    rng: np.random.Generator) -> bool:
    """One sample of the event {H(target) < exit time of D(rho)}."""
    z = _check_start(start, r)
    t = _check_start(target, r)
    if z == t:
        return True
    occ = Occupancy.of_region(r)
    stops = StopSet.build([t], occ.off, occ.ncols)
    _, _, code, _ = K.walk(z.x, z.y, occ.lo, occ.hi, occ.up, occ.dn, occ.off,
                           stops.ptr, stops.sy, stops.son, False, False, rng)
    return code == K.STOPPED


def hit_frequency(start: tuple[int, int], target: tuple[int, int], r: Region,
                  count: int, rng: np.random.Generator) -> int:
    """Number of walks among ``count`` that hit ``target`` before exiting."""
    z = _check_start(start, r)
    t = _check_start(target, r)
    if z == t:
        return count
    occ = Occupancy.of_region(r)
    stops = StopSet.build([t], occ.off, occ.ncols)
    _, _, codes = K.sample_endpoints(z.x, z.y, count, occ.lo, occ.hi, occ.up, occ.dn, occ.off,
                                     stops.ptr, stops.sy, stops.son, False, rng)
    return int(np.count_nonzero(codes == K.STOPPED))


def sample_exits(r: Region, start: tuple[int, int], count: int, rng: np.random.Generator,
                 mode: Mode = "shortcut") -> tuple[np.ndarray, np.ndarray]:
    """Exit sites of ``count`` independent walks, as coordinate arrays."""
    z = _check_start(start, r)
    occ = Occupancy.of_region(r)
    stops = StopSet.empty(occ.ncols)
    xs, ys, _ = K.sample_endpoints(z.x, z.y, count, occ.lo, occ.hi, occ.up, occ.dn, occ.off,
                                   stops.ptr, stops.sy, stops.son, mode == "naive", rng)
    return xs, ys


def exit_counts(r: Region, start: tuple[int, int], count: int, rng: np.random.Generator,
                mode: Mode = "shortcut") -> dict[Site, int]:
    xs, ys = sample_exits(r, start, count, rng, mode)
    pairs, counts = np.unique(np.stack([xs, ys], axis=1), axis=0, return_counts=True)
    return {Site(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}


def step_counts(z: tuple[int, int], count: int, rng: np.random.Generator) -> dict[Site, int]:
    """Empirical one-step law from ``z`` (compiled naive step)."""
    xs, ys = K.sample_steps(int(z[0]), int(z[1]), count, rng)
    pairs, counts = np.unique(np.stack([xs, ys], axis=1), axis=0, return_counts=True)
    return {Site(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}
