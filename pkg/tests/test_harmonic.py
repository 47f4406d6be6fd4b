from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combidla import harmonic as hm
from combidla.harness.calibration import measure_kappa_a
from combidla.lattice import ORIGIN, Region, Site, degree, parent


def test_closed_forms_rho3():
    assert hm.closed_h((0, 0), 3) == pytest.approx(27 / 14)
    assert hm.closed_h_plus((0, 0), 3) == pytest.approx(2.923076923, abs=1e-8)
    # zero on the boundary curve |y| = (rho - |x|)^2 / 3
    assert hm.closed_h((0, 3), 3) == pytest.approx(0.0)


def test_green_rho3_against_oracle():
    r = Region(3)
    g = hm.green_from_origin(r)
    assert 27 / 14 <= g.at_origin <= 2.923077
    orc = hm.GreenOracle(r)
    assert g.at_origin == pytest.approx(orc(ORIGIN, ORIGIN), rel=1e-10)
    assert g.at_origin == pytest.approx(2.0625, rel=1e-12)


def test_exact_mode_agrees_with_float():
    r = Region(5.5)
    ge = hm.green_from_origin(r, exact=True)
    gf = hm.green_from_origin(r)
    assert all(isinstance(v, Fraction) for v in ge.axis)
    assert np.allclose(np.array(ge.axis, dtype=float), gf.axis, rtol=1e-14)


@given(st.integers(2, 80).map(lambda k: k / 4))
@settings(max_examples=40, deadline=None)
def test_sandwich_any_radius(rho):
    r = Region(rho)
    g = hm.green_from_origin(r)
    for z in r.sites():
        v = g.value(z)
        assert hm.closed_h(z, rho) - 1e-12 <= v <= hm.closed_h_plus(z, rho) + 1e-12


@pytest.mark.parametrize("rho", [1, 2.5, 4, 7.75, 12])
def test_structured_matches_oracle(rho):
    r = Region(rho)
    orc = hm.GreenOracle(r)
    g = hm.green_from_origin(r)
    ref = orc.column(ORIGIN)
    assert np.allclose(g.values(orc.sites), ref, rtol=1e-10, atol=0)
    # expected visits starting from the origin
    row = orc.row(ORIGIN)
    for z, v in zip(orc.sites[::7], row[::7]):
        assert hm.green_visits_from_origin(r, z) == pytest.approx(v, rel=1e-10)
    assert g.residual() <= 1e-9 * g.max_abs()


def test_reversibility_rho4():
    r = Region(4)
    orc = hm.GreenOracle(r)
    G = orc.matrix()
    deg = np.array([degree(z) for z in orc.sites], dtype=float)
    # deg(w) G(w; z) = deg(z) G(z; w)
    lhs = deg[:, None] * G
    assert np.allclose(lhs, lhs.T, rtol=1e-9, atol=1e-12)
    assert np.all(G >= -1e-15)
    assert np.all(np.diag(G) >= 1 - 1e-12)
    # the transposed-degree form fails as soon as degrees differ
    i, j = orc.index[ORIGIN], orc.index[Site(0, 1)]
    assert not math.isclose(deg[j] * G[i, j], deg[i] * G[j, i])


@pytest.mark.parametrize("rho", [4, 7, 10.5])
def test_diagonal_at_internal_boundary(rho):
    r = Region(rho)
    orc = hm.GreenOracle(r)
    for z in r.internal_boundary():
        if z[1] != 0:
            assert orc(z, z) <= 2 + 1e-12


@pytest.mark.parametrize("rho", [1, 3, 5.5, 8, 21, 40.25])
def test_exit_distribution_sums_to_one(rho):
    r = Region(rho)
    ed = hm.exit_distribution(r)
    assert ed.total() == pytest.approx(1.0, abs=1e-9)
    assert set(ed.probs) == set(r.boundary())
    assert min(ed.probs.values()) >= 0


@pytest.mark.parametrize("rho,start", [(3, (0, 0)), (6, (2, 3)), (6, (-1, -7)), (9.5, (4, 0))])
def test_exit_distribution_matches_oracle(rho, start):
    r = Region(rho)
    ed = hm.exit_distribution(r, start)
    ref = hm.GreenOracle(r).exit_distribution(start)
    for z, p in ref.items():
        assert ed[z] == pytest.approx(p, rel=1e-9, abs=1e-13)


def test_exit_example_rho3():
    r = Region(3)
    p = hm.exit_distribution(r)[(0, 3)]
    lo, hi = hm.rough_exit_bounds(r, (0, 3))
    assert lo == pytest.approx(0.1607, abs=1e-4) and hi == pytest.approx(0.4286, abs=1e-4)
    assert lo <= p <= hi
    assert p == pytest.approx(hm.GreenOracle(r).exit_distribution(ORIGIN)[(0, 3)], rel=1e-12)


def test_exit_field_is_exit_law_in_start():
    r = Region(7)
    z = Site(2, r.absorbing_height(2))
    h = hm.exit_field(r, z)
    for w in list(r.sites())[::11]:
        assert h.value(w) == pytest.approx(hm.exit_distribution(r, w)[z], rel=1e-9, abs=1e-14)
    assert h.residual() <= 1e-12


def test_hitting_examples():
    r = Region(3)
    assert hm.hitting_prob_axis(r, 0) == 1
    u = hm.hitting_prob_axis(r, 1, exact=True)
    assert u == hm.one_step_formula(r, exact=True) == Fraction(33, 76)
    assert float(u) >= (3 / 4) ** 3
    assert hm.hitting_prob_axis(r, 1) == pytest.approx(hm.hitting_prob_axis_green(r, 1), abs=1e-12)
    with pytest.raises(ValueError):
        hm.hitting_prob_axis(r, 3)


def test_hitting_matches_oracle():
    r = Region(9)
    orc = hm.GreenOracle(r)
    for x in range(0, 8):
        w = (x, 0)
        assert hm.hitting_prob_axis(r, x) == pytest.approx(orc(ORIGIN, w) / orc(w, w), rel=1e-10)


def test_kappa_a_shape_rho40():
    r = Region(40)
    vals = [hm.hitting_prob_axis(r, x) * (40 / (40 - x)) ** 2 for x in (0, 10, 20, 30)]
    assert min(vals) > 0


def test_green_bound_case_iv_rho6():
    r = Region(6)
    for z in r.boundary():
        if z[1] == 0:
            continue
        for y in range(1, r.tooth_height(z[0]) + 1):
            w = (z[0], y if z[1] > 0 else -y)
            case, bound = hm.green_case_bound(w, z, r, 1.0, 1.0)
            assert case == "iv"
            assert hm.exit_distribution(r, w)[z] >= bound - 1e-12


@pytest.mark.parametrize("rho", [6, 12])
def test_green_bound_case_i_from_origin(rho):
    kappa_a = measure_kappa_a((rho,))
    r = Region(rho)
    ed = hm.exit_distribution(r)
    for z in r.boundary():
        if z[0] == 0 and z[1] != 0:
            continue
        case, bound = hm.green_case_bound(ORIGIN, z, r, kappa_a, 1.0)
        assert case == "i"
        assert ed[z] <= bound + 1e-12


def test_green_bound_top_of_own_column():
    r = Region(6)
    z = Site(2, r.absorbing_height(2))
    w = (2, -(r.tooth_height(2)))
    case, bound = hm.green_case_bound(w, z, r, 0.8, 1.0)
    assert case == "i" and 0 <= bound < math.inf


def test_g2_band_and_tip():
    ratios = []
    for rho in (6, 12, 24, 48):
        r = Region(rho)
        zs, sums, q = hm.g2_sums(r)
        ratios.extend(q.tolist())
        tip = Site(r.xmax + 1, 0)
        s, _ = hm.g2_sum(r, tip)
        assert s >= hm.exit_distribution(r, parent(tip))[tip] ** 2 > 0
    assert 0 < min(ratios) and max(ratios) / min(ratios) < 20


def test_mean_value():
    r = Region(5)
    assert hm.mean_value(lambda z: 3.0, r.sites()) == 0.0
    zs, mv, h0 = hm.exit_mean_values(Region(10))
    assert np.max(np.abs(mv)) < 1.0
    # direct sum for one site agrees with the vectorised one
    h = hm.exit_field(Region(10), zs[3])
    assert hm.mean_value(h, Region(10).sites()) == pytest.approx(mv[3], abs=1e-10)


def test_mean_value_on_smaller_region():
    r = Region(20)
    sub = Region(15)
    zs, mv, _ = hm.exit_mean_values(r, sub=sub)
    assert np.max(np.abs(mv)) < 1.0


@pytest.mark.parametrize("rho", [3, 5.5, 10, 21])
def test_green_boundary_bounds(rho):
    r = Region(rho)
    g = hm.green_from_origin(r)
    for zb in r.boundary():
        if zb[1] != 0 and not rho - abs(zb[0]) > 1:
            continue
        lo, hi = hm.green_boundary_bounds(r, zb)
        assert lo - 1e-12 <= g.value(parent(zb)) <= hi + 1e-12


def test_oracle_cap():
    with pytest.raises(ValueError):
        hm.GreenOracle(Region(40))
