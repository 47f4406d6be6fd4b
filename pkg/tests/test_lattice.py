from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combidla.lattice import (ORIGIN, Region, Site, d, degree, in_region, neighbors, parent,
                              parse_quarter, radii, radius_for_volume, rbar, volume)

sites = st.tuples(st.integers(-30, 30), st.integers(-60, 60))
quarters = st.integers(2, 120).map(lambda k: k / 4)


def brute_volume(rho: float) -> int:
    """Count lattice points of D(rho) by direct enumeration of the defining inequalities."""
    m = math.ceil(rho) + 1
    r = Fraction(rho)
    return sum(1 for x in range(-m, m + 1) for y in range(-m * m, m * m + 1)
               if abs(x) < r and 3 * abs(y) < (r - abs(x)) ** 2)


def test_neighbors_examples():
    assert degree((0, 0)) == 4
    assert set(neighbors((0, 0))) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert degree((3, 2)) == 2
    assert set(neighbors((3, 2))) == {(3, 1), (3, 3)}
    assert degree((-5, 0)) == 4


def test_parent_examples():
    assert parent((2, 5)) == (2, 4)
    assert parent((-3, 0)) == (-2, 0)
    assert parent((0, -1)) == (0, 0)
    with pytest.raises(ValueError):
        parent(ORIGIN)


def test_contains_examples():
    r = Region(3)
    assert (0, 2) in r
    assert (2, 1) not in r


@pytest.mark.parametrize("rho,vol", [(1, 1), (2, 5), (3, 13), (5.5, 79), (10, 445)])
def test_volume_examples(rho, vol):
    assert volume(rho) == vol == brute_volume(rho)


def test_d_matches_enumeration():
    assert d(5) == brute_volume(5) == 57
    assert d(20) == 3557


def test_radii_examples():
    R, Rb = radii((0, 3))
    assert Rb == pytest.approx(3.0)
    assert R == pytest.approx(math.sqrt(6))
    assert radii((4, 0)) == (3.0, 4.0)


@given(sites, quarters)
@settings(max_examples=300, deadline=None)
def test_boundary_iff_radii(z, rho):
    if z == (0, 0):
        return
    r = Region(rho)
    R, Rb = radii(z)
    assert r.is_boundary(z) == (R < rho <= Rb + 1e-12)


@given(sites, quarters)
@settings(max_examples=300, deadline=None)
def test_membership_symmetric_and_parent_closed(z, rho):
    r = Region(rho)
    x, y = z
    inside = z in r
    assert inside == ((-x, y) in r) == ((x, -y) in r) == in_region(rho, z)
    if inside and z != (0, 0):
        assert parent(z) in r


@given(quarters)
@settings(max_examples=60, deadline=None)
def test_region_structure(rho):
    r = Region(rho)
    assert r.volume == sum(2 * r.tooth_height(x) + 1 for x in r.columns.tolist())
    assert r.volume == brute_volume(rho)
    for x in r.columns.tolist():
        # absorbing height: smallest integer >= (rho - |x|)^2 / 3
        assert r.absorbing_height(x) == r.tooth_height(x) + 1
        assert r.absorbing_height(x) == math.ceil((Fraction(rho) - abs(x)) ** 2 / 3)
    sites = list(r.sites())
    assert sites == sorted(sites)
    bd = r.boundary()
    assert not set(bd) & set(sites)
    assert all(parent(z) in r for z in bd)
    # every comb neighbour of a site is inside or on the boundary
    bset = set(bd)
    assert all(w in r or w in bset for z in sites for w in neighbors(z))


def test_volume_growth():
    vols = [volume(n) / n ** 3 for n in range(10, 201, 10)]
    assert all(volume(n) <= volume(n + 0.25) for n in range(1, 60))
    assert abs(vols[-1] / (4 / 9) - 1) < 0.05


def test_radius_for_volume():
    rho = radius_for_volume(445)
    assert volume(rho) >= 445
    assert volume(rho - 1e-6) < 445


def test_parse_quarter():
    assert parse_quarter("5.25") == 5.25
    with pytest.raises(ValueError):
        parse_quarter("5.1")


def test_rbar_leaves_region():
    r = Region(7)
    for z in r.sites():
        assert rbar(z) < 7
    for z in r.boundary():
        assert rbar(z) >= 7
