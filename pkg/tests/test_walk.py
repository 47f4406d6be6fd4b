from __future__ import annotations

import numpy as np
import pytest

from combidla import harmonic as hm
from combidla.lattice import ORIGIN, Region, Site
from combidla.rng import stream
from combidla.stats import chi2_goodness, chi2_two_sample, within_sigma
from combidla.walk import (WalkState, excursion_hits, exit_counts, hit_before_exit, hit_frequency,
                           run_until_exit, step, step_counts, tooth_excursion)


def test_step_law_from_origin():
    counts = step_counts((0, 0), 10**5, stream(1))
    res = chi2_goodness(counts, {z: 0.25 for z in [(1, 0), (-1, 0), (0, 1), (0, -1)]})
    assert res.p_value > 1e-3


def test_step_law_on_tooth():
    counts = step_counts((2, 3), 10**5, stream(2))
    assert set(counts) == {(2, 2), (2, 4)}
    assert chi2_goodness(counts, {(2, 2): 0.5, (2, 4): 0.5}).p_value > 1e-3


def test_python_step_matches_kernel():
    a = WalkState(Site(0, 0), stream(3))
    path = []
    for _ in range(200):
        a = step(a)
        path.append(a.position)
    b = WalkState(Site(0, 0), stream(3))
    for z in path:
        b = step(b)
        assert b.position == z
    assert b.step_count == 200


def test_tooth_excursion_examples(rng):
    assert all(tooth_excursion(1, rng).absorbed for _ in range(100))
    with pytest.raises(ValueError):
        tooth_excursion(0, rng)
    out = tooth_excursion(3, rng)
    assert out.h in (None, 3)


@pytest.mark.parametrize("H", [2, 3, 5, 17])
def test_tooth_excursion_frequency(H):
    n = 10**6
    hits = excursion_hits(H, n, stream(H))
    assert within_sigma(hits, n, 1.0 / H, 3.0)


def test_exit_law_matches_exact_rho3():
    r = Region(3)
    counts = exit_counts(r, ORIGIN, 10**5, stream(4))
    assert sum(counts.values()) == 10**5
    assert set(counts) <= set(r.boundary())
    assert chi2_goodness(counts, hm.exit_distribution(r).probs).p_value > 1e-3


@pytest.mark.parametrize("rho,start", [(3, (0, 0)), (4.5, (1, 1)), (6, (-2, 0)), (6, (0, -5))])
def test_naive_equals_shortcut(rho, start):
    r = Region(rho)
    a = exit_counts(r, start, 10**5, stream(5), "shortcut")
    b = exit_counts(r, start, 10**5, stream(6), "naive")
    assert chi2_two_sample(a, b).p_value > 1e-3
    assert chi2_goodness(a, hm.exit_distribution(r, start).probs).p_value > 1e-3


def test_hit_before_exit():
    r = Region(3)
    assert hit_before_exit((0, 0), (0, 0), r, stream(7))
    n = 10**6
    hits = hit_frequency((0, 0), (1, 0), r, n, stream(8))
    assert within_sigma(hits, n, float(hm.one_step_formula(r)), 3.0)


def test_hitting_lower_shape():
    # P_0(H(x,0) < exit) >= kappa ((rho - x)/rho)^2 with one kappa > 0 across x
    r = Region(20)
    n = 20000
    ratios = []
    for x in (0, 5, 10, 15):
        p = hit_frequency((0, 0), (x, 0), r, n, stream(9, x)) / n
        ratios.append(p / ((20 - x) / 20) ** 2)
    assert min(ratios) > 0.3


def test_run_until_exit_records_hits():
    r = Region(5)
    z, hits = run_until_exit((0, 0), r, "shortcut", stream(10), targets=[(1, 0), (-1, 0)])
    assert r.is_boundary(z)
    assert set(hits) == {(1, 0), (-1, 0)}


def test_reproducible():
    r = Region(8)
    a = exit_counts(r, ORIGIN, 1000, stream(11))
    b = exit_counts(r, ORIGIN, 1000, stream(11))
    assert a == b


def test_exit_never_beyond_absorbing_height():
    r = Region(8)
    xs, ys = __import__("combidla.walk", fromlist=["sample_exits"]).sample_exits(r, ORIGIN, 20000, stream(12))
    for x, y in zip(xs.tolist(), ys.tolist()):
        assert r.is_boundary((x, y))
