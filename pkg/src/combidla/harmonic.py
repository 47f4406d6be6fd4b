"""Exact harmonic functions on D(rho) by reduction to the axis.

A function that is harmonic on a tooth is affine there, so a harmonic
function on D(rho) is fixed by its axis values and the values it takes at
the tooth tops (x, +-L(x)).  Substituting the affine closure into the axis
equations leaves, for each column x,

    (2 + 2/L(x)) f(x) - f(x-1) - f(x+1) = source(x) + (e_up(x) + e_dn(x)) / L(x)

where e_up, e_dn are the prescribed tooth-top values; axis sites just past
the ends contribute their boundary values.  This is a strictly diagonally
dominant tridiagonal system.

Two normalisations of Green's function appear below.  ``green_field(r, x0)``
returns v -> G(v; (x0, 0)), the expected number of visits to (x0, 0) from v,
which is harmonic in v away from (x0, 0).  The expected number of visits to v
from (x0, 0) follows by reversibility: deg(x0) G(x0; v) = deg(v) G(v; x0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import ORIGIN, Region, Site, degree, neighbors, parent
from .tridiag import solve_refined, thomas

BRUTE_CAP = 20000
DENSE_CAP = 4000
EXACT_CAP = 2000


# ---------------------------------------------------------------------------
# closed-form comparison functions


def closed_h(z: tuple[int, int], rho: float) -> float:
    """Lower comparison function for G(.;0) on D(rho); vanishes on the boundary curve."""
    ax = rho - abs(z[0])
    return 2.0 * ax / (rho * rho + 1.0 / 3.0) * (ax * ax / 3.0 - abs(z[1]))


def closed_h_plus(z: tuple[int, int], rho: float) -> float:
    """Upper comparison function, built on the enlarged radius [rho] + 1."""
    m = math.floor(rho) + 1
    ax = m - abs(z[0])
    return 2.0 * ax / (m * m + 1.0 / 3.0 + 1.0) * (ax * ax / 3.0 + 1.0 - abs(z[1]))


# ---------------------------------------------------------------------------
# harmonic fields


@dataclass
class HarmonicField:
    """Axis values plus tooth-top values of a tooth-affine function on D(rho).

    ``axis`` and ``end_up``/``end_dn`` are indexed by x + xmax.  Off the
    axis, f(x, y) = a + (e - a)|y|/L(x) with a the axis value and e the top
    value on the side of y.  Beyond the top the same affine formula is used,
    which keeps the function harmonic along the tooth.  ``exits`` holds the
    values at (-xmax-1, 0) and (xmax+1, 0).
    """

    region: Region
    axis: np.ndarray
    end_up: np.ndarray
    end_dn: np.ndarray
    exits: tuple[float, float] = (0.0, 0.0)
    sources: tuple[Site, ...] = ()

    def value(self, z: tuple[int, int]) -> float:
        x, y = int(z[0]), int(z[1])
        r = self.region
        if abs(x) > r.xmax:
            if y == 0 and abs(x) == r.xmax + 1:
                return float(self.exits[0] if x < 0 else self.exits[1])
            raise ValueError(f"{z} outside the closure of D({r.rho})")
        i = x + r.xmax
        a = self.axis[i]
        if y == 0:
            return float(a)
        e = self.end_up[i] if y > 0 else self.end_dn[i]
        return float(a + (e - a) * abs(y) / r.absorbing[i])

    def __call__(self, z: tuple[int, int]) -> float:
        return self.value(z)

    def values(self, sites: Iterable[tuple[int, int]]) -> np.ndarray:
        return np.array([self.value(z) for z in sites], dtype=float)

    @property
    def at_origin(self) -> float:
        return float(self.axis[self.region.xmax])

    def total(self, sub: Region | None = None) -> float:
        """Sum of f over D(sub) (default: the whole region); D(sub) must lie inside."""
        return float(_field_sums(self.region, self.axis[:, None], self.end_up[:, None],
                                 self.end_dn[:, None], sub)[0][0])

    def square_total(self) -> float:
        return float(_field_sums(self.region, self.axis[:, None], self.end_up[:, None],
                                 self.end_dn[:, None], None)[1][0])

    def residual(self) -> float:
        """Largest |deg f(z) - sum of neighbours| over non-source sites of D(rho)."""
        worst = 0.0
        srcs = set(self.sources)
        for z in self.region.sites():
            if z in srcs:
                continue
            s = sum(self.value(w) for w in neighbors(z))
            worst = max(worst, abs(degree(z) * self.value(z) - s))
        return worst

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.axis)), np.max(np.abs(self.end_up)),
                         np.max(np.abs(self.end_dn)), *map(abs, self.exits)))


def _tooth_sums(a: np.ndarray, e: np.ndarray, L: np.ndarray, T: np.ndarray):
    """Sums of f and f^2 over heights 1..T of teeth f(y) = a + (e - a) y / L."""
    shape = (-1,) + (1,) * (a.ndim - 1)
    L = L.reshape(shape).astype(float)
    T = T.reshape(shape).astype(float)
    dlt = (e - a) / L
    s1 = T * (T + 1) / 2
    s2 = T * (T + 1) * (2 * T + 1) / 6
    lin = T * a + dlt * s1
    sq = T * a * a + 2 * a * dlt * s1 + dlt * dlt * s2
    return lin, sq


def _field_sums(r: Region, axis: np.ndarray, up: np.ndarray, dn: np.ndarray,
                sub: Region | None):
    """Column-vectorised sums of f and f^2 over D(sub) for fields stored as columns."""
    L = r.absorbing
    if sub is None:
        T = r.heights
        keep = slice(None)
    else:
        if sub.xmax > r.xmax or np.any(sub.heights > r.heights[r.xmax - sub.xmax:r.xmax + sub.xmax + 1]):
            raise ValueError("sub-region must lie inside the field's region")
        keep = slice(r.xmax - sub.xmax, r.xmax + sub.xmax + 1)
        T = sub.heights
    a = axis[keep]
    lin_u, sq_u = _tooth_sums(a, up[keep], L[keep], T)
    lin_d, sq_d = _tooth_sums(a, dn[keep], L[keep], T)
    total = np.sum(a + lin_u + lin_d, axis=0)
    squares = np.sum(a * a + sq_u + sq_d, axis=0)
    return total, squares


def mean_value(f, sites) -> float:
    """MV(f, sites) = sum over sites of (f(z) - f(0)).

    ``f`` is a HarmonicField or any callable on sites; ``sites`` is a Region
    (closed-form tooth sums when ``f`` is a HarmonicField) or an iterable.
    """
    if isinstance(sites, Region) and isinstance(f, HarmonicField):
        return f.total(sites) - sites.volume * f.at_origin
    pts = sites.sites() if isinstance(sites, Region) else sites
    f0 = f(ORIGIN)
    return float(math.fsum(f(z) - f0 for z in pts))


# ---------------------------------------------------------------------------
# the axis system


def axis_system(r: Region, exact: bool = False):
    """Coefficients (sub, diag, sup) of the reduced axis system."""
    n = 2 * r.xmax + 1
    L = r.absorbing.tolist()
    if exact:
        diag = [Fraction(2) + Fraction(2, l) for l in L]
        return [Fraction(-1)] * n, diag, [Fraction(-1)] * n
    diag = 2.0 + 2.0 / np.asarray(L, dtype=float)
    return -np.ones(n), diag, -np.ones(n)


def solve_axis(r: Region, rhs, exact: bool = False):
    sub, diag, sup = axis_system(r, exact)
    if exact:
        return thomas(sub, diag, sup, [Fraction(v) for v in rhs])
    return solve_refined(sub, diag, sup, np.asarray(rhs, dtype=float))


def green_field(r: Region, x0: int = 0, exact: bool = False) -> HarmonicField:
    """v -> G(v; (x0, 0)) on D(rho), i.e. expected visits to (x0, 0) starting from v."""
    if abs(x0) > r.xmax:
        raise ValueError(f"({x0}, 0) not in D({r.rho})")
    if exact and r.volume > EXACT_CAP:
        raise ValueError(f"exact mode limited to |D| <= {EXACT_CAP}")
    n = 2 * r.xmax + 1
    rhs = [0] * n
    rhs[x0 + r.xmax] = 4
    axis = solve_axis(r, rhs, exact)
    if exact:
        axis = np.array(axis, dtype=object)
        zeros = np.array([Fraction(0)] * n, dtype=object)
        return HarmonicField(r, axis, zeros, zeros.copy(), (Fraction(0), Fraction(0)), (Site(x0, 0),))
    return HarmonicField(r, axis, np.zeros(n), np.zeros(n), (0.0, 0.0), (Site(x0, 0),))


def green_from_origin(r: Region, exact: bool = False) -> HarmonicField:
    """z -> G(z; 0).  On the axis this equals G(0; z); on teeth G(0; z) = 2 G(z; 0) / 4."""
    return green_field(r, 0, exact)


def green_visits_from_origin(r: Region, z: tuple[int, int]) -> float:
    """Expected visits to z before exit, starting at the origin."""
    return degree(z) / 4.0 * green_from_origin(r).value(z)


# ---------------------------------------------------------------------------
# exit laws


@dataclass
class ExitDistribution:
    region: Region
    start: Site
    probs: dict[Site, float] = field(default_factory=dict)

    def total(self) -> float:
        return math.fsum(self.probs.values())

    def __getitem__(self, z: tuple[int, int]) -> float:
        return self.probs.get(Site(int(z[0]), int(z[1])), 0.0)


def _axis_exit_probs(r: Region, x0: int) -> dict[Site, float]:
    g = green_field(r, x0)
    L = r.absorbing
    probs: dict[Site, float] = {}
    # P(exit at z) = G((x0,0); A(z)) / deg(A(z)) = G(A(z); (x0,0)) / 4
    probs[Site(-r.xmax - 1, 0)] = g.axis[0] / 4.0
    for i, x in enumerate(r.columns.tolist()):
        top = g.axis[i] / L[i] / 4.0
        probs[Site(x, -int(L[i]))] = top
        probs[Site(x, int(L[i]))] = top
    probs[Site(r.xmax + 1, 0)] = g.axis[-1] / 4.0
    return dict(sorted(probs.items()))


def exit_distribution(r: Region, start: tuple[int, int] = ORIGIN) -> ExitDistribution:
    """Law of the first site outside D(rho) for a walk started at ``start``."""
    w = Site(int(start[0]), int(start[1]))
    if w not in r:
        raise ValueError(f"start {w} not in D({r.rho})")
    base = _axis_exit_probs(r, w.x)
    if w.y == 0:
        return ExitDistribution(r, w, base)
    # gambler's ruin on the tooth, then restart from the base
    L = r.absorbing_height(w.x)
    up = abs(w.y) / L
    probs = {z: (1.0 - up) * p for z, p in base.items()}
    top = Site(w.x, L if w.y > 0 else -L)
    probs[top] += up
    return ExitDistribution(r, w, probs)


def exit_field(r: Region, z: tuple[int, int]) -> HarmonicField:
    """w -> P_w(walk exits D(rho) at z) for a boundary site z."""
    axis, up, dn, exits = _exit_fields(r, [Site(int(z[0]), int(z[1]))])
    return HarmonicField(r, axis[:, 0], up[:, 0], dn[:, 0], (exits[0][0], exits[1][0]))


def _exit_fields(r: Region, zs: Sequence[Site]):
    """Axis values, top values and end values of h_z for each z (as columns)."""
    n = 2 * r.xmax + 1
    k = len(zs)
    L = r.absorbing
    rhs = np.zeros((n, k))
    up = np.zeros((n, k))
    dn = np.zeros((n, k))
    left = np.zeros(k)
    right = np.zeros(k)
    for j, z in enumerate(zs):
        if not r.is_boundary(z):
            raise ValueError(f"{z} is not a boundary site of D({r.rho})")
        if z.y == 0:
            if z.x < 0:
                rhs[0, j] += 1.0
                left[j] = 1.0
            else:
                rhs[-1, j] += 1.0
                right[j] = 1.0
        else:
            i = z.x + r.xmax
            rhs[i, j] += 1.0 / L[i]
            (up if z.y > 0 else dn)[i, j] = 1.0
    axis = solve_axis(r, rhs)
    return axis, up, dn, (left, right)


def g2_sums(r: Region, zs: Sequence[tuple[int, int]] | None = None):
    """For each boundary z: sum over w in D(rho) of P_w(exit at z)^2, and the ratio
    to (rho + 1 - |X_z|)^2.  Returns (zs, sums, ratios)."""
    zs = [Site(int(a), int(b)) for a, b in (zs if zs is not None else r.boundary())]
    axis, up, dn, _ = _exit_fields(r, zs)
    _, sq = _field_sums(r, axis, up, dn, None)
    scale = np.array([(r.rho + 1 - abs(z.x)) ** 2 for z in zs])
    return zs, sq, sq / scale


def g2_sum(r: Region, z: tuple[int, int]) -> tuple[float, float]:
    _, s, q = g2_sums(r, [z])
    return float(s[0]), float(q[0])


def exit_mean_values(r: Region, zs: Sequence[tuple[int, int]] | None = None,
                     sub: Region | None = None):
    """MV(h_z, D(sub)) for each boundary z of D(rho) (sub defaults to rho).

    Returns (zs, mv, h_z(0)).
    """
    zs = [Site(int(a), int(b)) for a, b in (zs if zs is not None else r.boundary())]
    axis, up, dn, _ = _exit_fields(r, zs)
    dom = sub if sub is not None else r
    tot, _ = _field_sums(r, axis, up, dn, sub)
    h0 = axis[r.xmax]
    return zs, tot - dom.volume * h0, h0


# ---------------------------------------------------------------------------
# hitting probabilities


def hitting_prob_axis(r: Region, x: int, exact: bool = False):
    """P_0(walk hits (x, 0) before leaving D(rho)).

    Solves the recurrence u(k) = (u(k-1) + u(k+1))/4 + (1 - 1/L(k)) u(k)/2 on
    the axis between the far end (u = 0 past -xmax) and u(x) = 1.
    """
    x = abs(int(x))
    if x > r.xmax:
        raise ValueError(f"x={x} out of range for D({r.rho})")
    if x == 0:
        return Fraction(1) if exact else 1.0
    lo = -r.xmax
    ks = list(range(lo, x))
    L = [r.absorbing_height(k) for k in ks]
    m = len(ks)
    if exact:
        diag = [Fraction(2) + Fraction(2, l) for l in L]
        sub = [Fraction(-1)] * m
        rhs = [Fraction(0)] * m
        rhs[-1] = Fraction(1)
        u = thomas(sub, diag, sub, rhs)
    else:
        diag = 2.0 + 2.0 / np.asarray(L, dtype=float)
        sub = -np.ones(m)
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        u = solve_refined(sub, diag, sub, rhs)
    return u[-lo]


def hitting_prob_axis_green(r: Region, x: int) -> float:
    """Same quantity through Green's functions: G(0; w) / G(w; w) with w = (x, 0)."""
    g0 = green_from_origin(r).value((x, 0))
    gw = green_field(r, x).value((x, 0))
    return g0 / gw


def one_step_formula(r: Region, exact: bool = False):
    """(1 + 1/L(0) + 2/G(0;0))^-1, the one-step hitting formula for (1, 0)."""
    g00 = green_from_origin(r, exact).axis[r.xmax]
    L0 = r.absorbing_height(0)
    if exact:
        return 1 / (1 + Fraction(1, L0) + 2 / g00)
    return 1.0 / (1.0 + 1.0 / L0 + 2.0 / g00)


# ---------------------------------------------------------------------------
# bound evaluators


def green_boundary_bounds(r: Region, zb: tuple[int, int]) -> tuple[float, float]:
    """Lower and upper bounds for G(A(zb); 0) at a boundary site zb.

    On the axis tip the lower bound carries the factor 1/4 (the weaker of the
    two readings of that estimate).
    """
    z = parent(zb)
    rho = r.rho
    den = rho * rho + 1.0 / 3.0
    upper = 2.0 * (math.floor(rho) + 1 - abs(z[0])) / den
    if zb[1] != 0:
        return (rho - abs(z[0])) / den, upper
    return 0.25 * 2.0 * (rho + 1 - abs(z[0])) / den, upper


def rough_exit_bounds(r: Region, z: tuple[int, int]) -> tuple[float, float]:
    """Two-sided estimate of P_0(exit at z) in terms of |X_z| only."""
    den = r.rho ** 2 + 1.0 / 3.0
    ax = abs(z[0])
    return 0.5 * (r.rho - ax) / den, (r.rho + 1 - ax) / den


def absorbing_height_of(r: Region, x: int) -> int:
    """Smallest integer >= (rho - |x|)^2 / 3, for any column (0 past an integer tip)."""
    if abs(x) <= r.xmax:
        return r.absorbing_height(x)
    dx = Fraction(r.rho) - abs(x)
    return math.ceil(dx * dx / 3)


def green_bound_case(w: tuple[int, int], z: tuple[int, int]) -> str:
    """Which of the four position cases applies to (w, z), after reflecting so X_z >= 0."""
    xw, yw = w
    xz, yz = z
    if xz < 0:
        xw, xz = -xw, -xz
    sg = lambda v: (v > 0) - (v < 0)
    if xw == xz:
        return "iv" if sg(yw) == sg(yz) else "i"
    if 0 <= xw < xz:
        return "i"
    if 0 <= xz < xw:
        return "ii"
    return "iii"


def green_case_bound(w: tuple[int, int], z: tuple[int, int], r: Region,
                     kappa_a: float, kappa_iii: float) -> tuple[str, float]:
    """Case label and bound for P_w(exit at z).

    Cases i-iii give upper bounds, case iv a lower bound.  Coordinates are
    reflected so that X_z >= 0; |Y_w| enters through the chance of reaching
    the base of w's tooth.
    """
    if w not in r:
        raise ValueError(f"{w} not in D({r.rho})")
    if not r.is_boundary(z):
        raise ValueError(f"{z} is not a boundary site of D({r.rho})")
    case = green_bound_case(w, z)
    rho = r.rho
    xw = -w[0] if z[0] < 0 else w[0]
    yw = abs(w[1])
    xz = abs(z[0])
    Lw = absorbing_height_of(r, xw)
    if case == "iv":
        return case, 0.5 * yw / Lw
    if case == "i":
        return case, 4.0 / kappa_a * (Lw - yw) / Lw * (rho + 1 - xz) / (rho - xw) ** 2
    if case == "ii":
        Lz = absorbing_height_of(r, xz)
        if Lz == 0:
            return case, math.inf
        return case, 4.0 / kappa_a * (Lw - yw) / Lz * (rho - xw) / (rho - xz) ** 2
    return case, kappa_iii * (Lw - yw) / Lw * (rho - abs(xw)) ** 3 * (rho + 1 - xz) / rho ** 5


def bound_holds(case: str, bound: float, exact: float, slack: float = 1e-12) -> bool:
    if case == "iv":
        return exact >= bound - slack
    return exact <= bound + slack


# ---------------------------------------------------------------------------
# brute-force oracle


class GreenOracle:
    """G_{D(rho)}(w; z) from a sparse direct factorisation of I - P over all sites.

    Uses no tooth structure, so it serves as an independent check on the
    reduced solvers.
    """

    def __init__(self, r: Region, cap: int = BRUTE_CAP):
        if r.volume > cap:
            raise ValueError(f"|D({r.rho})| = {r.volume} exceeds the oracle cap {cap}")
        self.region = r
        self.sites = list(r.sites())
        self.index = {z: i for i, z in enumerate(self.sites)}
        n = len(self.sites)
        rows, cols, vals = [], [], []
        for i, z in enumerate(self.sites):
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
            dg = degree(z)
            for w in neighbors(z):
                j = self.index.get(w)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(-1.0 / dg)
        self._m = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
        self._lu = spla.splu(self._m)

    def column(self, z: tuple[int, int]) -> np.ndarray:
        """Vector over sites w of G(w; z)."""
        e = np.zeros(len(self.sites))
        e[self.index[Site(*z)]] = 1.0
        return self._lu.solve(e)

    def row(self, w: tuple[int, int]) -> np.ndarray:
        """Vector over sites z of G(w; z)."""
        e = np.zeros(len(self.sites))
        e[self.index[Site(*w)]] = 1.0
        return self._lu.solve(e, trans="T")

    def __call__(self, w: tuple[int, int], z: tuple[int, int]) -> float:
        return float(self.row(w)[self.index[Site(*z)]])

    def matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        n = len(self.sites)
        if n > cap:
            raise ValueError(f"dense matrix limited to {cap} sites")
        return self._lu.solve(np.eye(n))

    def exit_distribution(self, start: tuple[int, int]) -> dict[Site, float]:
        g = self.row(start)
        out: dict[Site, float] = {}
        for zb in self.region.boundary():
            a = parent(zb)
            out[zb] = float(g[self.index[a]] / degree(a))
        return out


def green_brute(r: Region) -> GreenOracle:
    return GreenOracle(r)
