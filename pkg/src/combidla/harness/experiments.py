"""Experiment runners.

Each runner takes an ExperimentConfig and returns an ExperimentResult with
plot-ready tables, a summary, hard checks (exact facts that gate the exit
code) and soft checks (trends in measured constants, reported only).
Replicas draw from stream(seed, replica) and are aggregated in replica
order, so results do not depend on the number of worker processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from .. import concentration as cn
from .. import flashing as fl
from .. import harmonic as hm
from .. import idla
from .. import sandpile as sp
from ..lattice import ORIGIN, Region, Site, d, parent
from ..rng import stream
from ..stats import chi2_goodness, chi2_two_sample, wilson
from ..walk import exit_counts
from .config import ExperimentConfig

log = logging.getLogger(__name__)

Table = tuple[list[str], list[list]]


@dataclass
class ExperimentResult:
    kind: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    hard: dict[str, bool] = field(default_factory=dict)
    soft: dict[str, bool] = field(default_factory=dict)
    snapshots: dict[str, Callable[[str], None]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.hard.values())

    def failures(self) -> list[str]:
        return [k for k, ok in self.hard.items() if not ok]


def pmap(fn, args: list, threads: int) -> list:
    """Ordered map, in worker processes when threads > 1."""
    if threads <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, args, chunksize=max(1, len(args) // (4 * threads))))


# ---------------------------------------------------------------------------
# harmonic


def green_checks(rho: float, oracle_cap: int = hm.BRUTE_CAP) -> dict:
    """Sandwich, residual, boundary bounds and oracle agreement for G(.;0) on D(rho)."""
    r = Region(rho)
    g = hm.green_from_origin(r)
    sites = list(r.sites())
    vals = g.values(sites)
    lo = np.array([hm.closed_h(z, rho) for z in sites])
    hi = np.array([hm.closed_h_plus(z, rho) for z in sites])
    bviol = 0
    for zb in r.boundary():
        a = parent(zb)
        if zb.y != 0 and not rho - abs(zb.x) > 1:
            continue
        blo, bhi = hm.green_boundary_bounds(r, zb)
        v = g.value(a)
        bviol += int(not blo - 1e-12 <= v <= bhi + 1e-12)
    err = None
    if r.volume <= oracle_cap:
        orc = hm.GreenOracle(r, cap=oracle_cap)
        ref = orc.column(ORIGIN)
        err = float(np.max(np.abs(g.values(orc.sites) - ref) / np.abs(ref)))
    return {
        "rho": float(rho), "volume": r.volume, "G00": g.at_origin,
        "sandwich_violations": int(np.sum((vals < lo - 1e-12) | (vals > hi + 1e-12))),
        "min_lower_gap": float(np.min(vals - lo)), "min_upper_gap": float(np.min(hi - vals)),
        "residual": g.residual() / g.max_abs(), "boundary_violations": bviol, "oracle_rel_err": err,
    }


def run_green(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    cols = ["rho", "volume", "G00", "sandwich_violations", "min_lower_gap", "min_upper_gap",
            "residual", "boundary_violations", "oracle_rel_err"]
    rows = [green_checks(rho, cfg.params["oracle_cap"]) for rho in cfg.params["rho_grid"]]
    res.tables["green"] = (cols, [[r[c] for c in cols] for r in rows])
    res.hard["sandwich"] = all(r["sandwich_violations"] == 0 for r in rows)
    res.hard["residual"] = all(r["residual"] <= 1e-9 for r in rows)
    res.hard["boundary_bounds"] = all(r["boundary_violations"] == 0 for r in rows)
    res.hard["oracle"] = all(r["oracle_rel_err"] is None or r["oracle_rel_err"] <= 1e-10 for r in rows)
    res.summary["G00"] = {str(r["rho"]): r["G00"] for r in rows}
    return res


def run_exit_dist(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    p = cfg.params
    rows = []
    sums, lower_fail, upper_fail = {}, [], []
    for rho in p["rho_grid"]:
        r = Region(rho)
        ed = hm.exit_distribution(r)
        sums[str(rho)] = ed.total()
        for z, v in ed.probs.items():
            if not abs(z.x) < rho:
                continue
            lo, hi = hm.rough_exit_bounds(r, z)
            if v < lo - 1e-12:
                lower_fail.append([rho, z.x, z.y, v / lo])
            if v > hi + 1e-12:
                upper_fail.append([rho, z.x, z.y, v / hi])
            rows.append([float(rho), z.x, z.y, v, lo, hi, v >= lo - 1e-12, v <= hi + 1e-12])
    res.tables["exit_bounds"] = (["rho", "x", "y", "exact", "lower", "upper", "lower_ok", "upper_ok"], rows)
    res.hard["sums_to_one"] = all(abs(s - 1) <= 1e-9 for s in sums.values())
    res.hard["rough_upper"] = not upper_fail
    res.hard["rough_lower"] = not lower_fail
    res.summary.update(sums=sums, lower_failures=lower_fail, upper_failures=upper_fail)

    mc_rows = []
    for k, rho in enumerate(p["mc_rho"]):
        r = Region(rho)
        exact = hm.exit_distribution(r).probs
        a = exit_counts(r, ORIGIN, cfg.replicas, stream(cfg.seed, k, 0), "shortcut")
        b = exit_counts(r, ORIGIN, cfg.replicas, stream(cfg.seed, k, 1), "naive")
        gof = chi2_goodness(a, exact)
        two = chi2_two_sample(a, b)
        res.hard[f"mc_exact_rho{rho}"] = gof.p_value > 1e-3
        res.hard[f"mc_naive_rho{rho}"] = two.p_value > 1e-3
        for z in sorted(exact):
            w = wilson(a.get(z, 0), cfg.replicas)
            mc_rows.append([float(rho), z.x, z.y, exact[z], w.estimate, w.ci95[0], w.ci95[1],
                            b.get(z, 0) / cfg.replicas])
        res.summary[f"chi2_p_rho{rho}"] = {"shortcut_vs_exact": gof.p_value, "shortcut_vs_naive": two.p_value}
    res.tables["exit_mc"] = (["rho", "x", "y", "exact", "shortcut", "ci_lo", "ci_hi", "naive"], mc_rows)
    return res


def kappa_a_rows(rho: float, xs) -> list[list]:
    r = Region(rho)
    return [[float(rho), x, float(u), float(u) * (rho / (rho - x)) ** 2]
            for x in xs for u in [hm.hitting_prob_axis(r, x)]]


def run_hitting(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    rows = []
    for rho in cfg.params["rho_grid"]:
        r = Region(rho)
        u = hm.hitting_prob_axis(r, 1)
        s9 = hm.one_step_formula(r)
        lower = (rho / (rho + 1)) ** 3
        g = hm.hitting_prob_axis_green(r, 1)
        rows.append([float(rho), float(u), float(s9), float(g), lower, abs(u - s9), u >= lower])
    res.tables["hitting"] = (["rho", "u0", "formula", "green_route", "lower", "abs_diff", "lower_ok"], rows)
    res.hard["one_step"] = all(row[5] <= 1e-10 for row in rows)
    res.hard["green_route"] = all(abs(row[1] - row[3]) <= 1e-10 for row in rows)
    res.hard["lower"] = all(row[6] for row in rows)
    kr = kappa_a_rows(cfg.params["kappa_rho"], cfg.params["kappa_x"])
    res.tables["kappa_a"] = (["rho", "x", "u0", "scaled"], kr)
    res.summary["kappa_a"] = min(row[3] for row in kr)
    res.soft["kappa_a_positive"] = res.summary["kappa_a"] > 0
    return res


# ---------------------------------------------------------------------------
# flashing


def run_flash(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    p = cfg.params
    rows, ratios = [], {}
    ceiling_ok = True
    for rho in p["rho_grid"]:
        fd = fl.flash_distribution_exact(float(rho))
        lo, hi = fd.bounds()
        pmax = max(fd.probs.get(z, 0.0) for z in fd.region.sites())
        cap = 27.0 / (4.0 * rho ** 3)
        rows.append([float(rho), fd.total(), lo, hi, fd.uniformity_ratio, pmax, cap, pmax <= cap])
        ratios[rho] = fd.uniformity_ratio
        if rho == p["ceiling_rho"]:
            ceiling_ok = pmax <= cap
            res.hard["sums_to_one"] = abs(fd.total() - 1) <= 1e-9
    res.tables["flash"] = (["rho", "total", "min_scaled", "max_scaled", "uniformity_ratio", "max_prob",
                            "ceiling", "ceiling_ok"], rows)
    res.hard["sums_to_one_all"] = all(abs(row[1] - 1) <= 1e-9 for row in rows)
    res.hard["ceiling"] = ceiling_ok
    band = [v for k, v in ratios.items() if k != p["ceiling_rho"]] or list(ratios.values())
    mean = float(np.mean(band))
    res.soft["uniformity_band"] = all(abs(v / mean - 1) <= p["band"] for v in band)
    res.summary.update(uniformity_ratios={str(k): v for k, v in ratios.items()}, band_mean=mean)
    return res


def run_crossing(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    p = cfg.params
    rows = []
    for R in p["R_grid"]:
        V = [(x, 0) for x in range(0, R + 1)] if p["V"] == "axis" else [tuple(v) for v in p["V"]]
        cr = fl.crossing_experiment(R, V, p["h"], p["beta"], cfg.replicas, stream(cfg.seed, R))
        sd = math.sqrt(max(cr.exact * (1 - cr.exact), 1e-300) / cfg.replicas)
        ok = abs(cr.stat.estimate - cr.exact) <= 5 * sd + 1.0 / cfg.replicas
        res.hard[f"mc_vs_exact_R{R}"] = ok
        res.hard[f"exact_below_bound_R{R}"] = cr.exact <= cr.bound_product + 1e-15
        rows.append([R, p["h"], cr.decomposition.M, len(cr.decomposition.well_covered), cr.stat.estimate,
                     cr.stat.ci95[0], cr.stat.ci95[1], cr.exact, cr.bound_product, cr.bound_exponential,
                     cr.h_star, cr.vacuous])
    res.tables["crossing"] = (["R", "h", "M", "well_covered", "estimate", "ci_lo", "ci_hi", "exact",
                               "bound_product", "bound_exponential", "h_star", "vacuous"], rows)
    res.soft["non_increasing"] = all(a[7] >= b[7] for a, b in zip(rows, rows[1:]))
    return res


# ---------------------------------------------------------------------------
# IDLA


def _idla_replica(args):
    n, seed, i = args
    c = idla.grow(d(n), None, stream(seed, i, n))
    g = idla.fluctuation_gaps(c, n)
    return g.a_in, g.a_out, g.columns, g.gap_up, g.gap_down, c.size, c.is_parent_closed()


def column_gap_correlation(n: float, profiles: list) -> tuple[float, float]:
    """Spearman correlation between |column gap| and n - |x| over columns of D(n)."""
    r = Region(n)
    xs, gaps = [], []
    for cols, gu, gd in profiles:
        keep = np.abs(cols) <= r.xmax
        for g in (gu, gd):
            xs.append(n - np.abs(cols[keep]))
            gaps.append(np.abs(g[keep]))
    res = sps.spearmanr(np.concatenate(xs), np.concatenate(gaps))
    return float(res.statistic), float(res.pvalue)


def run_idla(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    rows, col_rows, medians = [], [], {}
    sizes_ok = True
    for n in cfg.params["n_grid"]:
        out = pmap(_idla_replica, [(n, cfg.seed, i) for i in range(cfg.replicas)], cfg.threads)
        a_in = np.array([o[0] for o in out])
        a_out = np.array([o[1] for o in out])
        for i, o in enumerate(out):
            rows.append([n, i, o[0], o[1]])
        rho, pv = column_gap_correlation(n, [(o[2], o[3], o[4]) for o in out])
        medians[n] = (float(np.median(a_in)), float(np.median(a_out)))
        res.summary[f"n{n}"] = {
            "a_in_quantiles": np.quantile(a_in, [0.1, 0.5, 0.9]).tolist(),
            "a_out_quantiles": np.quantile(a_out, [0.1, 0.5, 0.9]).tolist(),
            "gap_correlation": rho, "gap_p_value": pv,
        }
        res.soft[f"gap_profile_n{n}"] = rho > 0 and pv < 0.01
        sizes_ok = sizes_ok and all(o[5] == d(n) and o[6] for o in out)
        for x in sorted(set().union(*(o[2].tolist() for o in out))):
            ups = [o[3][o[2] == x][0] for o in out if np.any(o[2] == x)]
            dns = [o[4][o[2] == x][0] for o in out if np.any(o[2] == x)]
            if ups:
                col_rows.append([n, x, n - abs(x), float(np.mean(ups)), float(np.mean(dns)), len(ups)])
        if cfg.params["snapshot"]:
            res.snapshots[f"cluster_n{n}"] = _cluster_snapshot(n, cfg.seed)
    res.tables["idla"] = (["n", "replica", "a_in", "a_out"], rows)
    res.tables["columns"] = (["n", "x", "n_minus_abs_x", "mean_gap_up", "mean_gap_down", "count"], col_rows)
    for j, name in enumerate(("a_in", "a_out")):
        vals = [m[j] for m in medians.values()]
        spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
        res.summary[f"{name}_median_spread"] = spread
        res.soft[f"{name}_bounded"] = spread <= 3.0
    res.hard["cluster_sizes"] = sizes_ok
    return res


def _cluster_snapshot(n: float, seed: int):
    def write(path: str) -> None:
        c = idla.grow(d(n), None, stream(seed, 0, n))
        c.write_snapshot(path, {"n": n, "seed": seed, "policy": "standard"})
    return write


def _tentacle_chunk(args):
    n, seed, lo, hi = args
    return [idla.grow(d(n), None, stream(seed, i, n)).axis_hi for i in range(lo, hi)]


def run_tentacle(cfg: ExperimentConfig) -> ExperimentResult:
    from .calibration import DEFAULT_BETA

    res = ExperimentResult(cfg.kind)
    p = cfg.params
    n = p["n"]
    beta = p["beta"] if p["beta"] is not None else DEFAULT_BETA
    for R in p["R_grid"]:
        if not d(n) < beta * R ** 3:
            raise ValueError(f"outside corollary regime at R={R}: need d(n) < beta R^3")
    step = 1000
    chunks = [(n, cfg.seed, lo, min(lo + step, cfg.replicas)) for lo in range(0, cfg.replicas, step)]
    reach = np.array([v for part in pmap(_tentacle_chunk, chunks, cfg.threads) for v in part])
    rows = []
    for R in p["R_grid"]:
        hits = int(np.count_nonzero(reach >= R))
        w = wilson(hits, cfg.replicas, "tentacle")
        rows.append([n, R, hits, cfg.replicas, w.estimate, w.ci95[0], w.ci95[1]])
    res.tables["tentacle"] = (["n", "R", "hits", "replicas", "frequency", "ci_lo", "ci_hi"], rows)
    res.hard["zero_crossings"] = all(row[2] == 0 for row in rows if row[1] >= p["hard_R"])
    res.soft["non_increasing"] = all(a[4] >= b[4] for a, b in zip(rows, rows[1:]))
    res.summary.update(beta=beta, max_axis_reach=int(reach.max()))
    return res


# ---------------------------------------------------------------------------
# sandpile


def run_sandpile(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    p = cfg.params
    rows = []
    for n in p["n_grid"]:
        m = float(d(n))
        tol = p["tol"] * m
        a = sp.topple(m, tol, "priorityQueue")
        b = sp.topple(m, tol, "sweep")
        cons = abs(a.total_mass() - m) / m
        sites = set(a.sites("mass")) | set(b.sites("mass"))
        diff = max(abs(a.mass(z) - b.mass(z)) for z in sites)
        R = sp.inclusion_radius(a, n)
        rows.append([n, m, a.iterations, cons, diff, 10 * tol, R, len(a.cluster())])
        if n == p["n_grid"][-1]:
            res.snapshots[f"sandpile_n{n}"] = a.write_snapshot
    res.tables["sandpile"] = (["n", "mass", "topplings", "conservation_err", "schedule_diff", "schedule_tol",
                               "inclusion_radius", "cluster_size"], rows)
    res.hard["conservation"] = all(r[3] <= 1e-9 for r in rows)
    res.hard["schedule_independence"] = all(r[4] <= r[5] for r in rows)
    radii = [r[6] for r in rows]
    res.soft["no_increasing_trend"] = radii[-1] <= max(radii[:-1] or radii) + 1
    ob = [(n, *sp.obstacle_sup_on_boundary(n)) for n in p["obstacle_n"]]
    ref = dict((n, s) for n, s, _ in ob).get(20, ob[0][1])
    K = 2.0 * ref
    res.tables["obstacle"] = (["n", "sup", "argmax_x", "K", "ok"], [[n, s, x, K, s <= K] for n, s, x in ob])
    res.soft["obstacle_bounded"] = all(s <= K for _, s, _ in ob)
    res.summary.update(K=K, inclusion_radii=radii)
    return res


# ---------------------------------------------------------------------------
# concentration


def run_mu(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    rows = []
    for n in cfg.params["n_grid"]:
        for L in cfg.params["L_grid"]:
            reps = cn.mu_reports(n, L)
            for m in reps:
                rows.append([n, L, m.z.x, m.z.y, m.mu, m.volume_term, m.mv_term, m.mv_ratio, m.scaled,
                             m.diagnostics["lambda"], m.diagnostics["size_b"]])
            sc = [m.scaled for m in reps]
            worst = max(m.mv_ratio for m in reps)
            res.summary[f"n{n}_L{L}"] = {"c2": min(sc), "c1": max(sc), "max_mv_ratio": worst}
            if L >= 4 and n >= 40:
                res.soft[f"mv_small_n{n}_L{L}"] = worst <= 0.05
            res.soft[f"shape_n{n}_L{L}"] = max(sc) / min(sc) < 1.5
            res.hard[f"positive_n{n}_L{L}"] = min(m.mu for m in reps) > 0
    res.tables["mu"] = (["n", "L", "x", "y", "mu", "volume_term", "mv_term", "mv_ratio", "scaled",
                         "lambda", "size_b"], rows)
    return res


def bernoulli_matrix() -> list[tuple[str, cn.BernoulliFamily]]:
    return [
        ("empty", cn.BernoulliFamily((), 2.0)),
        ("small", cn.BernoulliFamily((0.1,) * 50, 2.0)),
        ("moderate", cn.BernoulliFamily((0.3,) * 20, 2.0)),
        ("mixed", cn.BernoulliFamily((0.9,) * 20 + (0.1,) * 20, 4.0)),
    ]


def run_bernoulli(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind)
    spot_fam = cn.BernoulliFamily((0.25,) * 80, 2.0)
    spot = cn.bernoulli_bound(10.0, 0.0, 0.5, spot_fam)
    res.hard["spot_value"] = abs(spot - math.exp(-2.5)) <= 1e-12
    rows = []
    k = 0
    for name, fam in bernoulli_matrix():
        for mu in (2.0, 5.0, 10.0):
            for xi in cfg.params["xi_grid"]:
                if xi > mu:
                    continue
                tc = cn.mc_tail_check(fam, mu, float(xi), cfg.replicas, stream(cfg.seed, k))
                k += 1
                rows.append([name, fam.kappa, len(fam.means), fam.size_b, mu, xi, tc.lam, tc.empirical,
                             tc.bound, tc.slack, tc.holds])
    res.tables["bernoulli"] = (["family", "kappa", "size", "size_b", "mu", "xi", "lambda", "empirical",
                                "bound", "slack", "holds"], rows)
    res.hard["tail_below_bound"] = all(r[-1] for r in rows)
    res.summary.update(spot=spot, cells=len(rows))
    return res


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "green": run_green,
    "exit-dist": run_exit_dist,
    "hitting": run_hitting,
    "flash": run_flash,
    "idla": run_idla,
    "sandpile": run_sandpile,
    "tentacle": run_tentacle,
    "crossing": run_crossing,
    "mu": run_mu,
    "bernoulli": run_bernoulli,
}
