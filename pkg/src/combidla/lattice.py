"""Comb lattice geometry: adjacency, parent map, the regions D(rho) and radii.

The comb keeps every vertical edge of Z^2 and only the horizontal edges lying
on the x-axis.  Sites are plain integer pairs; ``Site`` is a NamedTuple so any
``(x, y)`` tuple can be passed where a site is expected.

D(rho) is the set of (x, y) with |x| < rho and |y| < (rho - |x|)^2 / 3.  All
membership decisions are made in exact rational arithmetic on the float value
of rho, so integer and quarter-integer radii never suffer rounding at the
boundary curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

import numpy as np

ORIGIN_ERROR = "origin has no parent"


class Site(NamedTuple):
    x: int
    y: int


ORIGIN = Site(0, 0)


def degree(z: tuple[int, int]) -> int:
    return 4 if z[1] == 0 else 2


def neighbors(z: tuple[int, int]) -> list[Site]:
    x, y = z
    if y == 0:
        return [Site(x - 1, 0), Site(x + 1, 0), Site(x, -1), Site(x, 1)]
    return [Site(x, y - 1), Site(x, y + 1)]


def parent(z: tuple[int, int]) -> Site:
    """Neighbor of ``z`` one step closer to the origin in the comb tree."""
    x, y = z
    if y > 0:
        return Site(x, y - 1)
    if y < 0:
        return Site(x, y + 1)
    if x > 0:
        return Site(x - 1, 0)
    if x < 0:
        return Site(x + 1, 0)
    raise ValueError(ORIGIN_ERROR)


def graph_distance(z: tuple[int, int]) -> int:
    return abs(z[0]) + abs(z[1])


def rbar(z: tuple[int, int]) -> float:
    """Radius at which ``z`` leaves the region: |x| + sqrt(3|y|)."""
    return abs(z[0]) + math.sqrt(3 * abs(z[1]))


def radii(z: tuple[int, int]) -> tuple[float, float]:
    """Return (R(z), Rbar(z)); z is on the boundary of D(r) iff R < r <= Rbar."""
    if z[0] == 0 and z[1] == 0:
        raise ValueError(ORIGIN_ERROR)
    return rbar(parent(z)), rbar(z)


def in_region(rho: float | Fraction, z: tuple[int, int]) -> bool:
    """Exact membership test for D(rho)."""
    r = Fraction(rho)
    dx = r - abs(z[0])
    return dx > 0 and 3 * abs(z[1]) < dx * dx


def _tooth_height(r: Fraction, x: int) -> int:
    # largest y with 3y < (r - |x|)^2, i.e. ceil(v/3) - 1
    dx = r - abs(x)
    v = dx * dx
    return math.ceil(v / 3) - 1


def parse_quarter(text: str) -> float:
    """Parse a radius given on the command line; it must be a multiple of 1/4."""
    value = Fraction(text)
    if value <= 0 or (value * 4).denominator != 1:
        raise ValueError(f"radius {text!r} must be a positive multiple of 1/4")
    return float(value)


@dataclass(frozen=True)
class Region:
    """The domain D(rho).

    Columns are indexed by ``x + xmax`` in the array-valued properties.
    """

    rho: float

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @cached_property
    def xmax(self) -> int:
        return math.ceil(self.rho) - 1

    @cached_property
    def heights(self) -> np.ndarray:
        """T(x) for x = -xmax..xmax."""
        r = Fraction(self.rho)
        half = [_tooth_height(r, x) for x in range(self.xmax + 1)]
        full = half[:0:-1] + half
        return np.asarray(full, dtype=np.int64)

    @property
    def absorbing(self) -> np.ndarray:
        """L(x) = T(x) + 1: first height outside the region in column x."""
        return self.heights + 1

    @property
    def columns(self) -> np.ndarray:
        return np.arange(-self.xmax, self.xmax + 1, dtype=np.int64)

    def tooth_height(self, x: int) -> int:
        if abs(x) > self.xmax:
            raise ValueError(f"column {x} outside D({self.rho})")
        return int(self.heights[x + self.xmax])

    def absorbing_height(self, x: int) -> int:
        return self.tooth_height(x) + 1

    def __contains__(self, z: object) -> bool:
        x, y = z  # type: ignore[misc]
        return abs(x) <= self.xmax and abs(y) <= self.heights[x + self.xmax]

    def contains(self, z: tuple[int, int]) -> bool:
        return z in self

    @cached_property
    def volume(self) -> int:
        return int(np.sum(2 * self.heights + 1))

    def sites(self) -> Iterator[Site]:
        """All sites, x ascending then y ascending."""
        for x, t in zip(self.columns.tolist(), self.heights.tolist()):
            for y in range(-t, t + 1):
                yield Site(x, y)

    def boundary(self) -> list[Site]:
        """Comb neighbors of D(rho) lying outside it, x ascending then y ascending."""
        out = [Site(-self.xmax - 1, 0)]
        for x, t in zip(self.columns.tolist(), self.heights.tolist()):
            out.append(Site(x, -t - 1))
            out.append(Site(x, t + 1))
        out.append(Site(self.xmax + 1, 0))
        return out

    def internal_boundary(self) -> list[Site]:
        """Sites of D(rho) with at least one neighbor outside."""
        out = []
        for x, t in zip(self.columns.tolist(), self.heights.tolist()):
            if t == 0:
                out.append(Site(x, 0))
                continue
            out.append(Site(x, -t))
            if abs(x) == self.xmax:
                out.append(Site(x, 0))
            out.append(Site(x, t))
        return out

    def is_boundary(self, z: tuple[int, int]) -> bool:
        x, y = z
        if abs(x) > self.xmax:
            return y == 0 and abs(x) == self.xmax + 1
        return abs(y) == self.heights[x + self.xmax] + 1

    def site_index(self) -> dict[Site, int]:
        return {z: i for i, z in enumerate(self.sites())}


def volume(rho: float) -> int:
    return Region(rho).volume


def d(n: float) -> int:
    """Number of sites of D(n)."""
    return Region(n).volume


def radius_for_volume(mass: float, tol: float = 1e-12) -> float:
    """Smallest rho with |D(rho)| >= mass, located by bisection.

    |D(rho)| jumps at the radii Rbar(z); the result is the jump point itself
    to within ``tol``, nudged just above it so that D(result) has the volume.
    """
    if mass <= 0:
        raise ValueError("mass must be positive")
    lo, hi = 0.0, 1.0
    while Region(hi).volume < mass:
        lo, hi = hi, 2 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid > 0 and Region(mid).volume >= mass:
            hi = mid
        else:
            lo = mid
    return hi


def iter_sites(sites: Iterable[tuple[int, int]]) -> list[Site]:
    """Sort sites x ascending then y ascending."""
    return sorted(Site(int(x), int(y)) for x, y in sites)
