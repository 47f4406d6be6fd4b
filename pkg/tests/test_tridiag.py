from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combidla.tridiag import matvec, solve_refined, thomas


@given(st.integers(1, 40), st.integers(0, 10**6))
@settings(max_examples=50, deadline=None)
def test_thomas_matches_dense(n, seed):
    g = np.random.default_rng(seed)
    sub = -g.random(n)
    sup = -g.random(n)
    diag = 2.5 + g.random(n)
    rhs = g.random(n)
    dense = np.diag(diag) + np.diag(sub[1:], -1) + np.diag(sup[:-1], 1)
    ref = np.linalg.solve(dense, rhs)
    assert np.allclose(thomas(sub, diag, sup, rhs), ref, rtol=1e-12, atol=1e-12)
    assert np.allclose(solve_refined(sub, diag, sup, rhs), ref, rtol=1e-13, atol=1e-13)


def test_thomas_exact():
    sub = [Fraction(-1)] * 3
    diag = [Fraction(3)] * 3
    rhs = [Fraction(1), Fraction(0), Fraction(2)]
    u = thomas(sub, diag, sub, rhs)
    assert all(isinstance(v, Fraction) for v in u)
    back = [diag[i] * u[i] + (sub[i] * u[i - 1] if i else 0) + (sub[i] * u[i + 1] if i < 2 else 0)
            for i in range(3)]
    assert back == rhs


def test_matvec():
    sub, diag, sup = np.array([0.0, -1.0]), np.array([2.0, 2.0]), np.array([-1.0, 0.0])
    assert np.allclose(matvec(sub, diag, sup, np.array([1.0, 1.0])), [1.0, 1.0])


def test_zero_pivot():
    with pytest.raises(ZeroDivisionError):
        thomas(np.zeros(2), np.zeros(2), np.zeros(2), np.ones(2))
