"""Concentration of sums of Bernoulli variables and the mu(z) pipeline.

Setting: W + L >= M, with L = Y_1 + ... + Y_n and M sums of independent
Bernoulli variables, W independent of L and mu = E[M] - E[L] >= 0.  The
indices split into A = {E[Y_i] < 1 - 1/kappa} and B (the rest); the tail
P(W <= xi) is bounded by

    exp(-lam (mu - xi) + lam^2/2 (mu + 4|B|/kappa^2 + kappa sum_A E[Y_i]^2))

for 0 <= lam <= log 2.  When B is empty the simpler form without the |B|
term is also available.

mu(z) is the expected number of explorers exiting D(n-L) at z, written as
a volume term plus a mean value term of the exit field h_z.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .harmonic import _exit_fields, _field_sums
from .lattice import Region, Site, volume

log = logging.getLogger(__name__)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BernoulliFamily:
    means: tuple[float, ...]
    kappa: float

    def __post_init__(self):
        if not self.kappa > 1:
            raise ValueError("kappa must exceed 1")
        m = np.asarray(self.means, dtype=float)
        if m.size and (m.min() < 0 or m.max() > 1):
            raise ValueError("Bernoulli means must lie in [0, 1]")
        object.__setattr__(self, "means", tuple(float(v) for v in m))

    @property
    def threshold(self) -> float:
        return 1.0 - 1.0 / self.kappa

    @property
    def part_a(self) -> list[int]:
        return [i for i, p in enumerate(self.means) if p < self.threshold]

    @property
    def part_b(self) -> list[int]:
        return [i for i, p in enumerate(self.means) if p >= self.threshold]

    @property
    def size_b(self) -> int:
        return len(self.part_b)

    @property
    def sum_sq_a(self) -> float:
        return math.fsum(self.means[i] ** 2 for i in self.part_a)

    @property
    def mean(self) -> float:
        return math.fsum(self.means)

    def variance_term(self, mu: float) -> float:
        """mu + 4|B|/kappa^2 + kappa sum_A E^2."""
        return mu + 4.0 * self.size_b / self.kappa ** 2 + self.kappa * self.sum_sq_a


def _check(mu: float, xi: float, lam: float) -> None:
    if not 0.0 <= lam <= LOG2 + 1e-15:
        raise ValueError(f"lambda must lie in [0, log 2], got {lam}")
    if xi < 0:
        raise ValueError("xi must be non-negative")


def bernoulli_bound(mu: float, xi: float, lam: float, fam: BernoulliFamily) -> float:
    _check(mu, xi, lam)
    return math.exp(-lam * (mu - xi) + 0.5 * lam * lam * fam.variance_term(mu))


def ag_bound(mu: float, xi: float, lam: float, fam: BernoulliFamily) -> float:
    """The form without the |B| term; valid when every mean is below 1 - 1/kappa."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if xi < 0:
        raise ValueError("xi must be non-negative")
    if fam.size_b:
        raise ValueError("every mean must lie below 1 - 1/kappa")
    return math.exp(-lam * (mu - xi) + 0.5 * lam * lam * (mu + fam.kappa * fam.sum_sq_a))


def optimal_lambda(mu: float, xi: float, fam: BernoulliFamily) -> float:
    """Unconstrained minimiser of the exponent, clamped to [0, log 2]."""
    v = fam.variance_term(mu)
    if v <= 0:
        return 0.0
    return min(max((mu - xi) / v, 0.0), LOG2)


def optimal_bound(mu: float, xi: float, fam: BernoulliFamily) -> tuple[float, float]:
    lam = optimal_lambda(mu, xi, fam)
    return lam, bernoulli_bound(mu, xi, lam, fam)


# ---------------------------------------------------------------------------
# Monte Carlo validation


@dataclass(frozen=True)
class TailCheck:
    empirical: float
    bound: float
    lam: float
    mu: float
    xi: float
    replicas: int

    @property
    def holds(self) -> bool:
        return self.empirical <= self.bound

    @property
    def slack(self) -> float:
        return self.bound - self.empirical


def _bernoulli_sum(means: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Samples of a sum of independent Bernoulli variables (equal means grouped into binomials)."""
    out = np.zeros(size, dtype=np.int64)
    vals, counts = np.unique(means, return_counts=True)
    for p, c in zip(vals, counts):
        if p > 0:
            out += rng.binomial(int(c), float(p), size=size)
    return out


def w_means(mu: float, cap: float = 0.5) -> np.ndarray:
    """Means of a Bernoulli family with total mu, each at most ``cap``."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if mu == 0:
        return np.zeros(0)
    m = math.ceil(mu / cap)
    return np.full(m, mu / m)


def mc_tail_check(fam: BernoulliFamily, mu_target: float, xi: float, replicas: int,
                  rng: np.random.Generator, extra: float = 0.0, chunk: int = 200_000) -> TailCheck:
    """Empirical P(W <= xi) for a synthetic triple and the bound at the optimal lambda.

    L is the sum over ``fam``; W' is an independent Bernoulli sum with mean
    mu_target drawn from its own stream; M = L + W' and W = W' + X with X a
    Poisson(extra) surplus.  Then W + L >= M, W is independent of L and
    E[M] - E[L] = mu_target.
    """
    if mu_target < 0:
        raise ValueError("construction needs E[M] - E[L] >= 0")
    if extra < 0:
        raise ValueError("surplus mean must be non-negative")
    lmeans = np.asarray(fam.means, dtype=float)
    wm = w_means(mu_target)
    rng_l, rng_w = rng.spawn(2)
    below = 0
    done = 0
    while done < replicas:
        k = min(chunk, replicas - done)
        big_l = _bernoulli_sum(lmeans, k, rng_l)
        w0 = _bernoulli_sum(wm, k, rng_w)
        big_m = big_l + w0
        w = w0 + (rng_w.poisson(extra, size=k) if extra > 0 else 0)
        if np.any(w + big_l < big_m):
            raise AssertionError("coupling violates W + L >= M")
        below += int(np.count_nonzero(w <= xi))
        done += k
    lam, b = optimal_bound(mu_target, xi, fam)
    return TailCheck(below / replicas, b, lam, mu_target, xi, replicas)


# ---------------------------------------------------------------------------
# mu(z)


@dataclass
class MuReport:
    n: float
    L: float
    z: Site
    mu: float
    volume_term: float
    mv_term: float
    h0: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def components(self) -> tuple[float, float]:
        return self.volume_term, self.mv_term

    @property
    def mv_ratio(self) -> float:
        return abs(self.mv_term) / self.volume_term if self.volume_term else math.inf

    @property
    def scaled(self) -> float:
        """mu / (L (n - L - |X_z|))."""
        return self.mu / (self.L * (self.n - self.L - abs(self.z.x)))


def _check_geometry(r: Region, n: float, L: float, z: Site) -> None:
    if not r.is_boundary(z):
        raise ValueError(f"{tuple(z)} is not on the outer boundary of D({n - L})")
    if abs(z.x) > n - L - 1:
        raise ValueError(f"|X_z| must be at most n - L - 1 = {n - L - 1}")


def mu_reports(n: float, L: float, zs=None) -> list[MuReport]:
    """mu(z) for many boundary sites of D(n - L) with one solve per column."""
    if L < 0 or not n - L >= 1:
        raise ValueError("need 0 <= L <= n - 1")
    r = Region(n - L)
    if zs is None:
        zs = [z for z in r.boundary() if abs(z.x) <= n - L - 1]
    zs = [Site(int(a), int(b)) for a, b in zs]
    for z in zs:
        _check_geometry(r, n, L, z)
    axis, up, dn, _ = _exit_fields(r, zs)
    tot, sq = _field_sums(r, axis, up, dn, None)
    h0 = axis[r.xmax]
    dvol = volume(n) - r.volume
    out = []
    for i, z in enumerate(zs):
        vt = dvol * float(h0[i])
        mv = float(tot[i] - r.volume * h0[i])
        out.append(MuReport(n, L, z, vt + mv, vt, mv, float(h0[i]), _diagnostics(r, z, vt + mv, float(sq[i]))))
    return out


def _diagnostics(r: Region, z: Site, mu: float, sum_sq: float) -> dict:
    """Partition of D(n-L) into B (same column and half-tooth as z) and A, and the proof's lambda."""
    size_b = 0
    if z.x in r.columns:
        t = r.tooth_height(z.x)
        size_b = 1 + (2 * t if z.y == 0 else t)
    denom = 2.0 * (16.0 * size_b + 0.5 * sum_sq)
    lam = mu / denom if denom > 0 else 0.0
    expo = -lam * mu + 0.5 * lam * lam * (mu + 16.0 * size_b + 0.5 * sum_sq)
    return {"size_b": size_b, "sum_h_sq": sum_sq, "lambda": lam, "lambda_ok": lam <= LOG2,
            "tail_bound": math.exp(expo)}


def mu_pipeline(n: float, L: float, z: tuple[int, int]) -> MuReport:
    return mu_reports(n, L, [z])[0]
