from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from combidla import concentration as cn
from combidla.lattice import Region
from combidla.rng import stream

means = st.lists(st.floats(0, 1), min_size=0, max_size=30)
kappas = st.floats(1.1, 10)


def test_spot_value():
    fam = cn.BernoulliFamily((0.25,) * 80, 2.0)
    assert fam.size_b == 0 and fam.sum_sq_a == pytest.approx(5.0)
    assert abs(cn.bernoulli_bound(10, 0, 0.5, fam) - math.exp(-2.5)) <= 1e-12


def test_partition():
    fam = cn.BernoulliFamily((0.1, 0.5, 0.75, 0.9), 4.0)
    assert fam.part_a == [0, 1] and fam.part_b == [2, 3]


def test_trivial_lambda_and_errors():
    fam = cn.BernoulliFamily((0.2, 0.95), 3.0)
    assert cn.bernoulli_bound(4.0, 1.0, 0.0, fam) == 1.0
    with pytest.raises(ValueError):
        cn.bernoulli_bound(4.0, 1.0, 0.8, fam)
    with pytest.raises(ValueError):
        cn.bernoulli_bound(4.0, -1.0, 0.1, fam)
    with pytest.raises(ValueError):
        cn.BernoulliFamily((0.2,), 1.0)
    with pytest.raises(ValueError):
        cn.ag_bound(4.0, 1.0, 0.1, fam)


@given(means, kappas, st.floats(0, 50), st.floats(0, 1), st.integers(0, 2**32))
@settings(max_examples=200, deadline=None)
def test_optimal_lambda_beats_random(ms, kappa, mu, frac, seed):
    fam = cn.BernoulliFamily(tuple(ms), kappa)
    xi = frac * mu
    lam, best = cn.optimal_bound(mu, xi, fam)
    assert 0 <= lam <= math.log(2)
    for l in np.random.default_rng(seed).uniform(0, math.log(2), 50):
        assert best <= cn.bernoulli_bound(mu, xi, float(l), fam) * (1 + 1e-12)


@given(means, kappas, st.floats(0.1, 50), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_monotonicity(ms, kappa, mu, a, b):
    fam = cn.BernoulliFamily(tuple(ms), kappa)
    lam = cn.optimal_lambda(mu, 0.0, fam)
    x1, x2 = sorted((a * mu, b * mu))
    assert cn.bernoulli_bound(mu, x1, lam, fam) <= cn.bernoulli_bound(mu, x2, lam, fam) * (1 + 1e-12)
    _, b1 = cn.optimal_bound(mu, 0.0, fam)
    _, b2 = cn.optimal_bound(mu * 1.5, 0.0, fam)
    assert b2 <= b1 * (1 + 1e-12)


def test_ag_form_is_smaller_without_b():
    fam = cn.BernoulliFamily((0.1,) * 10, 2.0)
    assert cn.ag_bound(5, 1, 0.3, fam) == pytest.approx(cn.bernoulli_bound(5, 1, 0.3, fam))


def test_xi_equal_mu_dominates():
    fam = cn.BernoulliFamily((0.3,) * 5, 2.0)
    assert cn.bernoulli_bound(3.0, 3.0, 0.4, fam) >= 1.0


def test_degenerate_binomial_tail():
    fam = cn.BernoulliFamily((), 2.0)
    mu, xi, n = 5.0, 2.0, 10**6
    tc = cn.mc_tail_check(fam, mu, xi, n, stream(1))
    m = len(cn.w_means(mu))
    exact = stats.binom.cdf(xi, m, mu / m)
    assert abs(tc.empirical - exact) <= 4 * math.sqrt(exact * (1 - exact) / n)
    assert tc.holds


def test_mixed_family():
    fam = cn.BernoulliFamily((0.9,) * 20 + (0.1,) * 20, 4.0)
    assert fam.size_b == 20
    for mu in (2.0, 10.0):
        for xi in (0.0, 1.0):
            tc = cn.mc_tail_check(fam, mu, xi, 10**6, stream(2, int(mu), int(xi)))
            assert tc.empirical <= tc.bound


def test_surplus_and_rejection():
    fam = cn.BernoulliFamily((0.5,) * 4, 2.0)
    tc = cn.mc_tail_check(fam, 3.0, 1.0, 10**5, stream(3), extra=1.0)
    assert tc.holds
    with pytest.raises(ValueError):
        cn.mc_tail_check(fam, -1.0, 0.0, 10, stream(3))


def test_mu_zero_L():
    r = Region(20)
    z = (0, r.absorbing_height(0))
    rep = cn.mu_pipeline(20, 0, z)
    assert rep.volume_term == 0
    assert rep.mu == rep.mv_term


def test_mu_column_zero_top():
    base = cn.mu_reports(20, 4)
    c2 = min(m.scaled for m in base)
    c1 = max(m.scaled for m in base)
    r = Region(36)
    rep = cn.mu_pipeline(40, 4, (0, r.absorbing_height(0)))
    assert rep.mu > 0
    assert 0.5 * c2 <= rep.scaled <= 2 * c1
    assert rep.mu == pytest.approx(rep.volume_term + rep.mv_term)
    assert rep.diagnostics["size_b"] == r.tooth_height(0) + 1


def test_mu_shape():
    reps = cn.mu_reports(40, 4)
    sc = [m.scaled for m in reps]
    assert max(sc) / min(sc) < 1.5


def test_mu_geometry_errors():
    r = Region(36)
    with pytest.raises(ValueError):
        cn.mu_pipeline(40, 4, (0, 0))
    with pytest.raises(ValueError):
        cn.mu_pipeline(40, 4, (r.xmax + 1, 0))
