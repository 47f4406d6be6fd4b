"""Small statistics helpers: Wilson intervals and chi-square comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


@dataclass(frozen=True)
class StatResult:
    estimate: float
    ci95: tuple[float, float]
    n_samples: int
    test_name: str
    p_value: float | None = None


def wilson(hits: int, n: int, name: str = "proportion") -> StatResult:
    if n <= 0:
        raise ValueError("need at least one sample")
    p = hits / n
    den = 1 + Z95 ** 2 / n
    mid = (p + Z95 ** 2 / (2 * n)) / den
    half = Z95 * math.sqrt(p * (1 - p) / n + Z95 ** 2 / (4 * n * n)) / den
    return StatResult(p, (max(0.0, mid - half), min(1.0, mid + half)), n, name)


def mean_ci(values, name: str = "mean") -> StatResult:
    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.inf
    return StatResult(m, (m - Z95 * se, m + Z95 * se), int(v.size), name)


def _pool(expected: np.ndarray, observed: np.ndarray, min_expected: float):
    """Merge cells with small expectation into one cell so the chi-square approximation holds."""
    small = expected < min_expected
    if not small.any():
        return expected, observed
    e = np.append(expected[~small], expected[small].sum())
    o = np.append(observed[~small], observed[small].sum())
    if e[-1] < min_expected and e.size > 1:
        e[-2] += e[-1]
        o[-2] += o[-1]
        e, o = e[:-1], o[:-1]
    return e, o


def chi2_goodness(counts: Mapping, probs: Mapping, name: str = "chi-square gof",
                  min_expected: float = 5.0) -> StatResult:
    """Chi-square test of observed counts against exact cell probabilities."""
    keys = sorted(set(probs) | set(counts))
    n = sum(counts.values())
    p = np.array([probs.get(k, 0.0) for k in keys], dtype=float)
    o = np.array([counts.get(k, 0) for k in keys], dtype=float)
    if np.any(o[p <= 0] > 0):
        return StatResult(0.0, (0.0, 0.0), n, name, 0.0)
    keep = p > 0
    e = p[keep] / p[keep].sum() * n
    e, o = _pool(e, o[keep], min_expected)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = e.size - 1
    pv = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return StatResult(stat, (stat, stat), n, name, pv)


def chi2_two_sample(a: Mapping, b: Mapping, name: str = "chi-square two-sample",
                    min_expected: float = 5.0) -> StatResult:
    """Chi-square homogeneity test for two count tables over the same cells."""
    keys = sorted(set(a) | set(b))
    ca = np.array([a.get(k, 0) for k in keys], dtype=float)
    cb = np.array([b.get(k, 0) for k in keys], dtype=float)
    tot = ca + cb
    order = np.argsort(tot)
    ca, cb, tot = ca[order], cb[order], tot[order]
    # merge sparse cells from the low end until every pooled cell is large enough
    na, nb = ca.sum(), cb.sum()
    frac = min(na, nb) / (na + nb)
    cells_a, cells_b, acc_a, acc_b = [], [], 0.0, 0.0
    for x, y in zip(ca, cb):
        acc_a += x
        acc_b += y
        if (acc_a + acc_b) * frac >= min_expected:
            cells_a.append(acc_a)
            cells_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0:
        if cells_a:
            cells_a[-1] += acc_a
            cells_b[-1] += acc_b
        else:
            cells_a.append(acc_a)
            cells_b.append(acc_b)
    table = np.array([cells_a, cells_b])
    if table.shape[1] < 2:
        return StatResult(0.0, (0.0, 0.0), int(na + nb), name, 1.0)
    stat, pv, _, _ = stats.chi2_contingency(table, correction=False)
    return StatResult(float(stat), (float(stat), float(stat)), int(na + nb), name, float(pv))


def within_sigma(hits: int, n: int, p: float, k: float = 3.0) -> bool:
    """Is the empirical frequency within k standard deviations of p?"""
    sd = math.sqrt(p * (1 - p) / n)
    return abs(hits / n - p) <= k * sd
