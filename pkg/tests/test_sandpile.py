from __future__ import annotations

import numpy as np
import pytest

from combidla import harmonic as hm
from combidla import sandpile as sp
from combidla.lattice import ORIGIN, Region, Site, d, parent


def test_subcritical():
    s = sp.topple(0.7)
    assert s.mass(ORIGIN) == pytest.approx(0.7)
    assert s.cluster() == set()
    s = sp.topple(1.0)
    assert s.mass(ORIGIN) == 1.0 and s.odometer(ORIGIN) == 0.0


@pytest.mark.parametrize("m", [5.0, 20.0])
def test_matches_reference_toppling(m):
    ref = sp.topple_reference(m, tol=1e-14)
    for schedule in sp.SCHEDULES:
        s = sp.topple(m, tol=1e-9, schedule=schedule)
        sites = set(ref["mass"]) | set(s.sites("mass"))
        err = max(abs(ref["mass"].get(z, 0.0) - s.mass(z)) for z in sites)
        assert err < 1e-6
        uerr = max(abs(ref["odometer"].get(z, 0.0) - s.odometer(z)) for z in set(ref["odometer"]))
        assert uerr < 1e-6 * max(ref["odometer"].values())


def test_symmetry():
    s = sp.topple(5.0, tol=1e-12)
    for z in s.sites("mass"):
        x, y = z
        for w in ((-x, y), (x, -y), (-x, -y)):
            assert s.mass(w) == pytest.approx(s.mass(z), abs=1e-9)


@pytest.mark.parametrize("n", [5, 10, 20])
def test_invariants(n):
    m = float(d(n))
    a = sp.topple(m, schedule="priorityQueue")
    b = sp.topple(m, schedule="sweep")
    assert abs(a.total_mass() - m) <= 1e-9 * m
    assert a.max_mass() <= 1 + a.tol
    cl = a.cluster()
    assert ORIGIN in cl
    assert all(parent(z) in cl for z in cl if z != ORIGIN)
    assert all(a.odometer(z) > 0 for z in cl)
    sites = set(a.sites("mass")) | set(b.sites("mass"))
    assert max(abs(a.mass(z) - b.mass(z)) for z in sites) <= 10 * a.tol


def test_mean_value_identity_polynomial():
    # x^2 - |y| is harmonic on the whole comb
    s = sp.topple(float(d(8)))
    h = lambda z: z[0] ** 2 - abs(z[1])
    assert abs(sp.mean_value_identity(s, h)) < 1e-6


def test_mean_value_identity_exit_field():
    n = 6
    s = sp.topple(float(d(n)), tol=1e-12)
    r = Region(n + 4)
    assert s.cluster() <= set(r.sites())
    for z in (Site(r.xmax + 1, 0), Site(1, r.absorbing_height(1)), Site(-3, -r.absorbing_height(-3))):
        h = hm.exit_field(r, z)
        assert abs(sp.mean_value_identity(s, h)) < 1e-6


def test_obstacle():
    assert sp.obstacle_gamma(100, 0, 100 ** 2 / 3) == pytest.approx(0.5 * (7 / 36) ** 2, rel=0.1)
    sups = [sp.obstacle_sup_on_boundary(n)[0] for n in (20, 50, 100, 200)]
    assert max(sups) <= 2 * sups[0]
    g = np.random.default_rng(0)
    for x, y in g.uniform(-50, 50, size=(100, 2)):
        assert sp.obstacle_gamma(30, x, y) >= 0


def test_inclusion_radius():
    r = Region(8)
    assert sp.inclusion_radius(set(r.sites()), 8) == 0.0
    radii = [sp.inclusion_radius(sp.topple(float(d(n))), n) for n in (10, 20)]
    assert max(radii) <= 3


def test_snapshot(tmp_path):
    s = sp.topple(57.0)
    p = tmp_path / "s.jsonl"
    s.write_snapshot(p)
    lines = p.read_text().splitlines()
    assert '"schedule": "priorityQueue"' in lines[0]
    assert len(lines) == 1 + len(s.xs)


def test_errors():
    with pytest.raises(ValueError):
        sp.topple(-1.0)
    with pytest.raises(ValueError):
        sp.topple(5.0, schedule="random")
