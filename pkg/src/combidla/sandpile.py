"""Divisible sandpile on the comb.

A site holding mass m > 1 topples: it keeps 1 and sends (m - 1)/deg to each
neighbour.  The final mass field and the odometer u (total mass emitted per
site) do not depend on the toppling order, which is what makes the following
accelerated schedule legitimate.

Teeth are never iterated site by site.  During the process a tooth always
looks like: heights 1..K-1 hold mass exactly 1, height K holds f in [0, 1),
higher sites are empty.  Excess d entering at height 1 spreads through the
full sites as a walk killed at {0, K}; a fraction 1/K lands on the frontier K
and the rest returns to the base.  Once K is full the frontier moves up.  The
odometer of tooth site y picks up d * 2(K - y)/K from such a chunk (expected
visits of the killed walk), which we accumulate per frontier value and expand
at the end.  Only axis sites are toppled explicitly, by sweeps or by a
max-excess priority queue.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .lattice import ORIGIN, Region, Site, degree, neighbors

SCHEDULES = ("sweep", "priorityQueue")


# ---------------------------------------------------------------------------
# compiled core


@njit(cache=True)
def _absorb(s, i, dlt, K, f, A, B, hmax):
    """Feed ``dlt`` into height 1 of tooth (s, i); return mass sent back to the base.

    Returns -1.0 if the tooth would outgrow ``hmax``.
    """
    back = 0.0
    while dlt > 0.0:
        k = K[s, i]
        if f[s, i] >= 1.0:
            K[s, i] = k + 1
            f[s, i] = 0.0
            continue
        if k + 1 >= hmax:
            return -1.0
        room = (1.0 - f[s, i]) * k
        c = dlt if dlt <= room else room
        f[s, i] += c / k
        back += c * (1.0 - 1.0 / k)
        A[s, i, k] += 2.0 * c
        B[s, i, k] += 2.0 * c / k
        if dlt <= room:
            dlt = 0.0
        else:
            dlt -= room
            K[s, i] = k + 1
            f[s, i] = 0.0
    return back


@njit(cache=True)
def _topple_axis(i, ma, ua, K, f, A, B, hmax):
    """Topple axis site i once; returns False on array overflow."""
    e = ma[i] - 1.0
    if e <= 0.0:
        return True
    if i == 0 or i == ma.shape[0] - 1:
        return False
    q = 0.25 * e
    ma[i] = 1.0
    ua[i] += e
    ma[i - 1] += q
    ma[i + 1] += q
    b0 = _absorb(0, i, q, K, f, A, B, hmax)
    b1 = _absorb(1, i, q, K, f, A, B, hmax)
    if b0 < 0.0 or b1 < 0.0:
        return False
    ma[i] += b0 + b1
    return True


@njit(cache=True)
def _excess(ma):
    t = 0.0
    for v in ma:
        if v > 1.0:
            t += v - 1.0
    return t


@njit(cache=True)
def _run_sweep(ma, ua, K, f, A, B, hmax, tol, max_topples):
    topples = 0
    n = ma.shape[0]
    while True:
        for i in range(n):
            if ma[i] > 1.0:
                if not _topple_axis(i, ma, ua, K, f, A, B, hmax):
                    return topples, 2
                topples += 1
        if _excess(ma) < tol:
            return topples, 0
        if topples > max_topples:
            return topples, 1


@njit(cache=True)
def _run_queue(ma, ua, K, f, A, B, hmax, tol, max_topples):
    topples = 0
    heap = [(0.0, 0)]
    heap.pop()
    for i in range(ma.shape[0]):
        if ma[i] > 1.0:
            heapq.heappush(heap, (1.0 - ma[i], i))
    since_check = 0
    while len(heap) > 0:
        _, i = heapq.heappop(heap)
        if ma[i] <= 1.0:
            continue
        if not _topple_axis(i, ma, ua, K, f, A, B, hmax):
            return topples, 2
        topples += 1
        for j in (i - 1, i, i + 1):
            if ma[j] > 1.0:
                heapq.heappush(heap, (1.0 - ma[j], j))
        since_check += 1
        if since_check >= 64:
            since_check = 0
            if _excess(ma) < tol:
                return topples, 0
        if topples > max_topples:
            return topples, 1
    return topples, 0


# ---------------------------------------------------------------------------
# public API


@dataclass
class SandpileState:
    """Final (or current) mass and odometer, stored per column.

    ``xs`` lists the axis columns carrying mass; for each, the tooth arrays
    hold heights 1, 2, ... on the up (y > 0) and down (y < 0) sides.
    """

    initial_mass: float
    tol: float
    schedule: str
    iterations: int
    xs: np.ndarray
    mass_axis: np.ndarray
    odo_axis: np.ndarray
    mass_up: list[np.ndarray]
    mass_dn: list[np.ndarray]
    odo_up: list[np.ndarray]
    odo_dn: list[np.ndarray]
    _col: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._col = {int(x): i for i, x in enumerate(self.xs.tolist())}

    def _lookup(self, z, axis, up, dn) -> float:
        i = self._col.get(int(z[0]))
        if i is None:
            return 0.0
        y = int(z[1])
        if y == 0:
            return float(axis[i])
        arr = up[i] if y > 0 else dn[i]
        return float(arr[abs(y) - 1]) if abs(y) <= arr.shape[0] else 0.0

    def mass(self, z: tuple[int, int]) -> float:
        return self._lookup(z, self.mass_axis, self.mass_up, self.mass_dn)

    def odometer(self, z: tuple[int, int]) -> float:
        return self._lookup(z, self.odo_axis, self.odo_up, self.odo_dn)

    def total_mass(self) -> float:
        parts = [self.mass_axis.tolist()]
        parts += [a.tolist() for a in self.mass_up] + [a.tolist() for a in self.mass_dn]
        return math.fsum(v for p in parts for v in p)

    def max_mass(self) -> float:
        vals = [float(np.max(self.mass_axis))] if self.mass_axis.size else [0.0]
        vals += [float(np.max(a)) for a in self.mass_up + self.mass_dn if a.size]
        return max(vals)

    def sites(self, which: str = "mass"):
        """Sites with positive mass (``which='mass'``) or positive odometer."""
        axis, up, dn = ((self.mass_axis, self.mass_up, self.mass_dn) if which == "mass"
                        else (self.odo_axis, self.odo_up, self.odo_dn))
        for i, x in enumerate(self.xs.tolist()):
            for k in range(dn[i].shape[0] - 1, -1, -1):
                if dn[i][k] > 0:
                    yield Site(x, -k - 1)
            if axis[i] > 0:
                yield Site(x, 0)
            for k in range(up[i].shape[0]):
                if up[i][k] > 0:
                    yield Site(x, k + 1)

    def cluster(self) -> set[Site]:
        """The set {u > 0}."""
        return set(self.sites("odometer"))

    def write_snapshot(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"initialMass": self.initial_mass, "tol": self.tol,
                                 "schedule": self.schedule, "iterations": self.iterations},
                                sort_keys=True) + "\n")
            for i, x in enumerate(self.xs.tolist()):
                rec = {"x": x, "massAxis": float(self.mass_axis[i]), "uAxis": float(self.odo_axis[i]),
                       "massUp": self.mass_up[i].tolist(), "massDown": self.mass_dn[i].tolist(),
                       "uUp": self.odo_up[i].tolist(), "uDown": self.odo_dn[i].tolist()}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _tooth_odometer(A: np.ndarray, B: np.ndarray, top: int) -> np.ndarray:
    """u(y) = sum over frontier values k > y of (A_k - y B_k), for y = 1..top."""
    sa = np.cumsum(A[::-1])[::-1]
    sb = np.cumsum(B[::-1])[::-1]
    y = np.arange(1, top + 1)
    u = sa[y + 1] - y * sb[y + 1] if top > 0 else np.zeros(0)
    return np.maximum(u, 0.0)


def topple(initial_mass: float, tol: float | None = None, schedule: str = "priorityQueue",
           max_topples: int = 10**9) -> SandpileState:
    """Stabilise mass ``initial_mass`` placed at the origin.

    Stops once the total excess above 1 falls below ``tol`` (default
    1e-9 * initial_mass).
    """
    if not initial_mass > 0:
        raise ValueError("initial mass must be positive")
    if tol is None:
        tol = 1e-9 * initial_mass
    if not tol > 0:
        raise ValueError("tol must be positive")
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    n_est = (9.0 * initial_mass / 4.0) ** (1.0 / 3.0)
    half = int(n_est) + 8
    hmax = int(n_est * n_est / 3.0 * 1.5) + 16
    while True:
        w = 2 * half + 1
        ma = np.zeros(w)
        ma[half] = float(initial_mass)
        ua = np.zeros(w)
        K = np.ones((2, w), np.int64)
        f = np.zeros((2, w))
        A = np.zeros((2, w, hmax + 1))
        B = np.zeros((2, w, hmax + 1))
        run = _run_sweep if schedule == "sweep" else _run_queue
        topples, status = run(ma, ua, K, f, A, B, hmax, tol, max_topples)
        if status == 2:
            half, hmax = 2 * half, 2 * hmax
            continue
        if status == 1:
            raise RuntimeError(f"no convergence after {topples} topplings "
                               f"(excess {_excess(ma):.3e} > tol {tol:.3e})")
        break
    cols = np.nonzero(ma > 0)[0]
    xs = cols - half
    mass_up, mass_dn, odo_up, odo_dn = [], [], [], []
    for i in cols.tolist():
        for s, (ml, ol) in enumerate(((mass_up, odo_up), (mass_dn, odo_dn))):
            k = int(K[s, i])
            m = np.ones(k)
            m[k - 1] = f[s, i]
            if f[s, i] == 0.0:
                m = m[: k - 1]
            ml.append(m)
            ol.append(_tooth_odometer(A[s, i], B[s, i], k - 1))
    return SandpileState(float(initial_mass), float(tol), schedule, int(topples), xs.astype(np.int64),
                         ma[cols].copy(), ua[cols].copy(), mass_up, mass_dn, odo_up, odo_dn)


def topple_reference(initial_mass: float, tol: float = 1e-14, max_sweeps: int = 10**7) -> dict:
    """Plain site-by-site toppling over a dictionary, for small masses.

    Returns {"mass": {site: m}, "odometer": {site: u}}.  Used as an
    independent check of the accelerated solver.
    """
    mass = {ORIGIN: float(initial_mass)}
    odo: dict[Site, float] = {}
    for _ in range(max_sweeps):
        active = sorted(z for z, m in mass.items() if m > 1.0)
        if not active:
            break
        for z in active:
            e = mass[z] - 1.0
            if e <= 0:
                continue
            mass[z] = 1.0
            odo[z] = odo.get(z, 0.0) + e
            share = e / degree(z)
            for w in neighbors(z):
                mass[w] = mass.get(w, 0.0) + share
        if math.fsum(m - 1.0 for m in mass.values() if m > 1.0) < tol:
            break
    else:
        raise RuntimeError("reference toppling did not converge")
    return {"mass": mass, "odometer": odo}


# ---------------------------------------------------------------------------
# obstacle function and inclusion radius


def obstacle_t(n: float) -> float:
    T = 4.0 * n / 3.0
    return T - (20.0 / 27.0) / T


def obstacle_gamma(n: float, x: float, y: float) -> float:
    """Obstacle function at (x, y); symmetric in both coordinates."""
    x, y = abs(x), abs(y)
    t = obstacle_t(n)
    inner = 0.5 * ((2.0 / 3.0) * x * x - t * x + (9.0 / 24.0) * t * t + 1.0 / 6.0)
    return 0.5 * (y - inner) ** 2


def obstacle_sup_on_boundary(n: float, samples: int = 20001) -> tuple[float, float]:
    """Largest obstacle value on the curve |y| = (n - |x|)^2 / 3, and the x where it occurs."""
    xs = np.linspace(0.0, n, samples)
    vals = np.array([obstacle_gamma(n, x, (n - x) ** 2 / 3.0) for x in xs])
    k = int(np.argmax(vals))
    return float(vals[k]), float(xs[k])


def comb_obstacle_radius(n: float) -> float:
    """Radius parameter n' of the comb obstacle problem for our n, from n^3 = 9 n' / 4."""
    return 4.0 * n ** 3 / 9.0


def inclusion_radius(cluster, n: float) -> float:
    """Smallest R with D(n) eroded by B(R) inside ``cluster`` and ``cluster`` inside D(n) dilated by B(R).

    ``cluster`` is a SandpileState (its set {u > 0} is used) or a set of
    sites.  B(R) is the open Euclidean ball; the value returned is the
    infimum of admissible R.
    """
    pts = cluster.cluster() if isinstance(cluster, SandpileState) else {Site(*z) for z in cluster}
    r = Region(n)
    dom = set(r.sites())
    outer = 0.0
    extra = np.array([z for z in pts if z not in dom], dtype=float).reshape(-1, 2)
    if extra.size:
        d, _ = cKDTree(np.array(sorted(dom), dtype=float)).query(extra)
        outer = float(np.max(d))
    inner = 0.0
    missing = np.array([z for z in dom if z not in pts], dtype=float).reshape(-1, 2)
    if missing.size:
        tmax = int(np.max(r.heights))
        comp = [(x, y) for x in range(-r.xmax - 2, r.xmax + 3)
                for y in range(-tmax - 2, tmax + 3) if (x, y) not in r]
        d, _ = cKDTree(np.array(comp, dtype=float)).query(missing)
        inner = float(np.max(d))
    return max(inner, outer)


def mean_value_identity(state: SandpileState, h) -> float:
    """Sum over sites of w(z)(h(z) - h(0)); vanishes when h is harmonic on {u > 0}."""
    h0 = h(ORIGIN)
    return math.fsum(state.mass(z) * (h(z) - h0) for z in state.sites("mass"))
