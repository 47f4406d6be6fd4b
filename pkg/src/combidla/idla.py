"""Internal DLA on the comb.

Explorers start at the origin (or at a frozen position when resuming a wave)
and settle at the first unoccupied site they reach.  The occupied set is
parent-closed, so it is stored as an axis interval plus a height per tooth
side; walks use the exact tooth shortcuts of ``walk``.

Policies:
  standard  every explorer settles.
  confined  an explorer whose first unoccupied site lies outside ``region``
            is discarded, so the cluster stays inside the region.
  star      explorers settle in D(n) only before their first exit from D(n);
            after that they keep walking until they find an unoccupied site
            outside the outer region and settle there.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numba import njit

from . import _kernels as K
from .lattice import Region, Site, d, rbar
from .walk import StopSet

SETTLED = 0
SETTLED_OUTER = 1
DISCARDED = 2
FROZEN = 3


@dataclass(frozen=True)
class SettlementPolicy:
    kind: Literal["standard", "confined", "star"] = "standard"
    region: Region | None = None
    inner: Region | None = None
    outer: Region | None = None

    def __post_init__(self) -> None:
        if self.kind == "confined" and self.region is None:
            raise ValueError("confined policy needs a region")
        if self.kind == "star":
            if self.inner is None or self.outer is None:
                raise ValueError("star policy needs inner and outer regions")
            if self.outer.rho < self.inner.rho:
                raise ValueError("outer region must contain the inner one")

    @classmethod
    def standard(cls) -> "SettlementPolicy":
        return cls("standard")

    @classmethod
    def confined(cls, region: Region) -> "SettlementPolicy":
        return cls("confined", region=region)

    @classmethod
    def star(cls, inner: Region, outer: Region) -> "SettlementPolicy":
        return cls("star", inner=inner, outer=outer)

    def describe(self) -> str:
        if self.kind == "confined":
            return f"confined({self.region.rho})"
        if self.kind == "star":
            return f"star({self.inner.rho},{self.outer.rho})"
        return "standard"


@dataclass
class CombCluster:
    """Parent-closed occupied set: axis interval [axis_lo, axis_hi] plus tooth heights.

    ``up[c]``/``down[c]`` belong to column x = c - off.  An empty cluster has
    axis_lo > axis_hi.
    """

    axis_lo: int
    axis_hi: int
    up: np.ndarray
    down: np.ndarray
    off: int

    @classmethod
    def empty(cls, halfwidth: int) -> "CombCluster":
        w = 2 * halfwidth + 1
        return cls(0, -1, np.zeros(w, np.int64), np.zeros(w, np.int64), halfwidth)

    @classmethod
    def from_region(cls, r: Region, halfwidth: int | None = None) -> "CombCluster":
        half = max(halfwidth or 0, r.xmax + 1)
        c = cls.empty(half)
        c.axis_lo, c.axis_hi = -r.xmax, r.xmax
        sl = slice(half - r.xmax, half + r.xmax + 1)
        c.up[sl] = r.heights
        c.down[sl] = r.heights
        return c

    @classmethod
    def from_sites(cls, sites: Iterable[tuple[int, int]], halfwidth: int | None = None) -> "CombCluster":
        pts = {Site(int(x), int(y)) for x, y in sites}
        if not pts:
            return cls.empty(halfwidth or 1)
        xs = [z.x for z in pts if z.y == 0]
        half = max(halfwidth or 0, max(abs(z.x) for z in pts) + 1)
        c = cls.empty(half)
        c.axis_lo, c.axis_hi = min(xs), max(xs)
        for z in pts:
            if z.y > 0:
                c.up[z.x + half] = max(c.up[z.x + half], z.y)
            elif z.y < 0:
                c.down[z.x + half] = max(c.down[z.x + half], -z.y)
        if c.size != len(pts) or not c.is_parent_closed():
            raise ValueError("site set is not parent-closed")
        return c

    @property
    def size(self) -> int:
        if self.axis_lo > self.axis_hi:
            return 0
        return int(self.axis_hi - self.axis_lo + 1 + self.up.sum() + self.down.sum())

    def __contains__(self, z: object) -> bool:
        x, y = z  # type: ignore[misc]
        if x < self.axis_lo or x > self.axis_hi:
            return False
        if y == 0:
            return True
        c = x + self.off
        return y <= self.up[c] if y > 0 else -y <= self.down[c]

    def columns(self) -> range:
        return range(self.axis_lo, self.axis_hi + 1)

    def height(self, x: int, side: int = 1) -> int:
        c = x + self.off
        if c < 0 or c >= self.up.shape[0]:
            return 0
        return int(self.up[c] if side > 0 else self.down[c])

    def sites(self):
        """Occupied sites, x ascending then y ascending."""
        for x in self.columns():
            c = x + self.off
            for y in range(-int(self.down[c]), int(self.up[c]) + 1):
                yield Site(x, y)

    def site_set(self) -> set[Site]:
        return set(self.sites())

    def is_parent_closed(self) -> bool:
        if self.axis_lo > self.axis_hi:
            return not self.up.any() and not self.down.any()
        if not (self.axis_lo <= 0 <= self.axis_hi):
            return False
        outside = np.ones(self.up.shape[0], bool)
        outside[self.axis_lo + self.off:self.axis_hi + self.off + 1] = False
        return not self.up[outside].any() and not self.down[outside].any()

    def copy(self) -> "CombCluster":
        return CombCluster(self.axis_lo, self.axis_hi, self.up.copy(), self.down.copy(), self.off)

    def subset_of(self, other: "CombCluster") -> bool:
        return all(z in other for z in self.sites())

    def write_snapshot(self, path: str | Path, header: dict) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({**header, "size": self.size}, sort_keys=True) + "\n")
            for x in self.columns():
                rec = {"x": x, "up": self.height(x, 1), "down": self.height(x, -1)}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass
class StarCluster:
    """Cluster of the star policy: settled sites inside D(n) plus those outside the outer region.

    The union is not parent-closed, so the two parts are kept apart.
    ``free`` encodes the outer region together with the outer settled sites.
    """

    inner: CombCluster
    outer_sites: list[Site]
    free: CombCluster

    @property
    def size(self) -> int:
        return self.inner.size + len(self.outer_sites)

    def site_set(self) -> set[Site]:
        return self.inner.site_set() | set(self.outer_sites)


@dataclass
class GrowthRecord:
    """Per-explorer outcome of a growth run."""

    cluster: CombCluster | StarCluster
    settle_x: np.ndarray
    settle_y: np.ndarray
    status: np.ndarray

    @property
    def frozen(self) -> dict[Site, int]:
        out: dict[Site, int] = {}
        for x, y in zip(self.settle_x[self.status == FROZEN].tolist(),
                        self.settle_y[self.status == FROZEN].tolist()):
            out[Site(x, y)] = out.get(Site(x, y), 0) + 1
        return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# compiled growth loops


@njit(cache=True)
def _settle(ex, ey, lo, hi, up, dn, off):
    if ey == 0:
        if lo > hi:
            lo = ex
            hi = ex
        elif ex == hi + 1:
            hi = ex
        else:
            lo = ex
    elif ey > 0:
        up[ex + off] += 1
    else:
        dn[ex + off] += 1
    return lo, hi


@njit(cache=True)
def _grow_batch(sx, sy0, lo, hi, up, dn, off, ptr, sy, son, confine, reg_h, reg_off, reg_xmax,
                out_x, out_y, status, rng):
    for i in range(sx.shape[0]):
        ex, ey, code, _ = K.walk_shortcut(sx[i], sy0[i], lo, hi, up, dn, off, ptr, sy, son, False, rng)
        out_x[i] = ex
        out_y[i] = ey
        if code == K.STOPPED:
            status[i] = FROZEN
            continue
        if confine:
            inside = abs(ex) <= reg_xmax and abs(ey) <= reg_h[ex + reg_off]
            if not inside:
                status[i] = DISCARDED
                continue
        status[i] = SETTLED
        lo, hi = _settle(ex, ey, lo, hi, up, dn, off)
    return lo, hi


@njit(cache=True)
def _grow_star(count, lo, hi, up, dn, flo, fhi, fup, fdn, off, in_h, in_off, in_xmax,
               ptr, sy, son, out_x, out_y, status, rng):
    for i in range(count):
        ex, ey, _, _ = K.walk_shortcut(0, 0, lo, hi, up, dn, off, ptr, sy, son, False, rng)
        if abs(ex) <= in_xmax and abs(ey) <= in_h[ex + in_off]:
            lo, hi = _settle(ex, ey, lo, hi, up, dn, off)
            out_x[i] = ex
            out_y[i] = ey
            status[i] = SETTLED
            continue
        # first exit from D(n): keep walking through the free set
        fx, fy, _, _ = K.walk_shortcut(ex, ey, flo, fhi, fup, fdn, off, ptr, sy, son, False, rng)
        flo, fhi = _settle(fx, fy, flo, fhi, fup, fdn, off)
        out_x[i] = fx
        out_y[i] = fy
        status[i] = SETTLED_OUTER
    return lo, hi, flo, fhi


# ---------------------------------------------------------------------------
# growth API


def _halfwidth(n_explorers: int, policy: SettlementPolicy) -> int:
    half = n_explorers + 2
    if policy.kind == "star":
        half += policy.outer.xmax + 2
    if policy.kind == "confined":
        half = min(half, policy.region.xmax + 2)
    return half


def grow_detailed(n_explorers: int, policy: SettlementPolicy | None, rng: np.random.Generator,
                  *, cluster: CombCluster | None = None,
                  starts: Sequence[tuple[int, int]] | None = None,
                  stop_set: Iterable[tuple[int, int]] = (),
                  explorer_rng: Callable[[int], np.random.Generator] | None = None) -> GrowthRecord:
    """Launch explorers one after another and record each outcome.

    ``starts`` overrides the launch sites (default: the origin).  Explorers
    that reach a site of ``stop_set`` at a time >= 1 freeze there.  With
    ``explorer_rng`` each explorer draws from its own stream.
    """
    if n_explorers < 0:
        raise ValueError("number of explorers must be non-negative")
    policy = policy or SettlementPolicy.standard()
    if starts is not None and len(starts) != n_explorers:
        raise ValueError("one start per explorer required")
    stop_list = list(stop_set)
    out_x = np.zeros(n_explorers, np.int64)
    out_y = np.zeros(n_explorers, np.int64)
    status = np.zeros(n_explorers, np.int8)

    if policy.kind == "star":
        if starts is not None or stop_list:
            raise ValueError("star policy runs single-wave from the origin")
        half = _halfwidth(n_explorers, policy)
        inner = cluster.copy() if cluster is not None else CombCluster.empty(half)
        free = CombCluster.from_region(policy.outer, half)
        if inner.off != free.off:
            raise ValueError("cluster width does not match the star arrays")
        stops = StopSet.empty(inner.up.shape[0])
        inr = policy.inner
        res = _grow_star(n_explorers, inner.axis_lo, inner.axis_hi, inner.up, inner.down,
                         free.axis_lo, free.axis_hi, free.up, free.down, inner.off,
                         inr.heights, inr.xmax, inr.xmax, stops.ptr, stops.sy, stops.son,
                         out_x, out_y, status, rng)
        inner.axis_lo, inner.axis_hi, free.axis_lo, free.axis_hi = (int(v) for v in res)
        outer = [Site(x, y) for x, y, s in zip(out_x.tolist(), out_y.tolist(), status.tolist())
                 if s == SETTLED_OUTER]
        return GrowthRecord(StarCluster(inner, outer, free), out_x, out_y, status)

    if cluster is None:
        extent = max([abs(int(s[0])) for s in (starts or [])] + [0])
        cluster = CombCluster.empty(_halfwidth(n_explorers, policy) + extent)
    else:
        cluster = cluster.copy()
    ncols = cluster.up.shape[0]
    stops = StopSet.build(stop_list, cluster.off, ncols) if stop_list else StopSet.empty(ncols)
    if starts is None:
        sx = np.zeros(n_explorers, np.int64)
        sy0 = np.zeros(n_explorers, np.int64)
    else:
        sx = np.array([int(s[0]) for s in starts], np.int64)
        sy0 = np.array([int(s[1]) for s in starts], np.int64)
    if policy.kind == "confined":
        reg = policy.region
        reg_h, reg_off, reg_xmax, confine = reg.heights, reg.xmax, reg.xmax, True
    else:
        reg_h, reg_off, reg_xmax, confine = np.zeros(1, np.int64), 0, -1, False

    def run(lo_i, hi_i, g):
        fresh = stops.son.copy()
        lo, hi = _grow_batch(sx[lo_i:hi_i], sy0[lo_i:hi_i], cluster.axis_lo, cluster.axis_hi,
                             cluster.up, cluster.down, cluster.off, stops.ptr, stops.sy, stops.son,
                             confine, reg_h, reg_off, reg_xmax, out_x[lo_i:hi_i], out_y[lo_i:hi_i],
                             status[lo_i:hi_i], g)
        stops.son[:] = fresh
        cluster.axis_lo, cluster.axis_hi = int(lo), int(hi)

    if explorer_rng is None:
        run(0, n_explorers, rng)
    else:
        for i in range(n_explorers):
            run(i, i + 1, explorer_rng(i))
    return GrowthRecord(cluster, out_x, out_y, status)


def grow(n_explorers: int, policy: SettlementPolicy | None, rng: np.random.Generator,
         **kwargs) -> CombCluster | StarCluster:
    return grow_detailed(n_explorers, policy, rng, **kwargs).cluster


@dataclass(frozen=True)
class WaveConfig:
    """Explorers of this wave freeze on first hitting a site of ``stop_set``."""

    stop_set: frozenset[Site] = field(default_factory=frozenset)

    @classmethod
    def of(cls, sites: Iterable[tuple[int, int]]) -> "WaveConfig":
        return cls(frozenset(Site(int(x), int(y)) for x, y in sites))


def grow_waves(n_explorers: int, policy: SettlementPolicy | None, waves: Sequence[WaveConfig],
               rng: np.random.Generator) -> tuple[CombCluster, list[dict[Site, int]]]:
    """Grow in waves: each wave freezes explorers on its stop set, and the next
    wave relaunches the frozen ones.  A final wave without stops releases
    everything still frozen.

    Returns the cluster and the frozen configuration left after each wave.
    """
    policy = policy or SettlementPolicy.standard()
    if policy.kind == "star":
        raise ValueError("waves are implemented for standard and confined policies")
    half = _halfwidth(n_explorers, policy)
    cluster = CombCluster.empty(half)
    starts: list[tuple[int, int]] = [(0, 0)] * n_explorers
    history: list[dict[Site, int]] = []
    for wave in list(waves) + [WaveConfig()]:
        if not starts:
            history.append({})
            continue
        rec = grow_detailed(len(starts), policy, rng, cluster=cluster, starts=starts,
                            stop_set=sorted(wave.stop_set))
        cluster = rec.cluster
        zeta = rec.frozen
        history.append(zeta)
        starts = [z for z, c in zeta.items() for _ in range(c)]
    return cluster, history


# ---------------------------------------------------------------------------
# fluctuation metrics


@dataclass
class FluctuationGaps:
    a_in: float
    a_out: float
    columns: np.ndarray
    gap_up: np.ndarray
    gap_down: np.ndarray
    scaled_up: np.ndarray
    scaled_down: np.ndarray
    size_mismatch: bool = False


def inner_radius(c: CombCluster) -> float:
    """Largest rho with D(rho) inside the cluster: the smallest Rbar over unoccupied sites."""
    if c.size == 0:
        return 0.0
    best = min(float(abs(c.axis_hi + 1)), float(abs(c.axis_lo - 1)))
    for x in c.columns():
        best = min(best, rbar((x, c.height(x, 1) + 1)), rbar((x, c.height(x, -1) + 1)))
    return best


def outer_radius(c: CombCluster) -> float:
    """Largest Rbar over occupied sites: the cluster lies in D(rho) for every rho above it."""
    if c.size == 0:
        return 0.0
    best = 0.0
    for x in c.columns():
        best = max(best, rbar((x, c.height(x, 1))), rbar((x, c.height(x, -1))))
    return best


def fluctuation_gaps(c: CombCluster, n: float) -> FluctuationGaps:
    """Inner and outer gaps of the cluster relative to D(n), in units of sqrt(log n).

    a_in is attained; a_out is the infimum of admissible a (the inclusion is
    strict at that value).  Column gaps are tooth-height differences with
    D(n), scaled by (2/3) sqrt(log n) (n - |x|).
    """
    if n < 3:
        raise ValueError("n must be at least 3 so that sqrt(log n) > 1")
    s = math.sqrt(math.log(n))
    mismatch = c.size != d(n)
    if mismatch:
        warnings.warn(f"cluster size {c.size} differs from d(n) = {d(n)}", stacklevel=2)
    a_in = max(0.0, (n - inner_radius(c)) / s)
    a_out = max(0.0, (outer_radius(c) - n) / s)
    r = Region(n)
    span = max(r.xmax, abs(c.axis_lo), abs(c.axis_hi)) if c.size else r.xmax
    xs = np.arange(-span, span + 1)
    ref = np.array([r.tooth_height(x) if abs(x) <= r.xmax else -1 for x in xs.tolist()])
    occ_axis = np.array([x in c for x in ((x, 0) for x in xs.tolist())])
    hu = np.where(occ_axis, [c.height(x, 1) for x in xs.tolist()], -1)
    hd = np.where(occ_axis, [c.height(x, -1) for x in xs.tolist()], -1)
    scale = (2.0 / 3.0) * s * np.maximum(n - np.abs(xs), 1.0)
    gu = hu - ref
    gd = hd - ref
    return FluctuationGaps(a_in, a_out, xs, gu, gd, gu / scale, gd / scale, mismatch)


def tentacle_frequency(n: int, R: int, replicas: int, seed: int, beta: float) -> tuple[int, int]:
    """Count replicas of A(n) containing (R, 0); returns (hits, replicas)."""
    from .rng import stream

    if not d(n) < beta * R ** 3:
        raise ValueError("outside corollary regime: need d(n) < beta R^3")
    hits = 0
    for i in range(replicas):
        c = grow(d(n), None, stream(seed, i))
        hits += int(c.axis_hi >= R)
    return hits, replicas
