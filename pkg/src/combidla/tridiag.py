"""Thomas algorithm for tridiagonal systems.

Works on float arrays (with one or many right-hand sides as columns) and on
lists of ``fractions.Fraction`` for exact solves.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def thomas(sub: Sequence, diag: Sequence, sup: Sequence, rhs):
    """Solve A x = rhs where A has ``sub`` below, ``diag`` on, ``sup`` above the diagonal.

    ``sub[0]`` and ``sup[-1]`` are ignored.  No pivoting: the comb systems are
    strictly diagonally dominant.
    """
    n = len(diag)
    exact = not isinstance(rhs, np.ndarray)
    cp = [None] * n
    dp = [None] * n
    if diag[0] == 0:
        raise ZeroDivisionError("singular tridiagonal system")
    cp[0] = sup[0] / diag[0] if n > 1 else 0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - sub[i] * cp[i - 1]
        if m == 0:
            raise ZeroDivisionError("singular tridiagonal system")
        if i < n - 1:
            cp[i] = sup[i] / m
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m
    x = [None] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    if exact:
        return x
    return np.asarray(x, dtype=float)


def matvec(sub, diag, sup, x: np.ndarray) -> np.ndarray:
    sub = np.asarray(sub, dtype=float)
    diag = np.asarray(diag, dtype=float)
    sup = np.asarray(sup, dtype=float)
    shape = (-1,) + (1,) * (x.ndim - 1)
    y = diag.reshape(shape) * x
    y[1:] += sub[1:].reshape(shape) * x[:-1]
    y[:-1] += sup[:-1].reshape(shape) * x[1:]
    return y


def solve_refined(sub, diag, sup, rhs: np.ndarray) -> np.ndarray:
    """Float Thomas solve followed by one residual-correction pass."""
    rhs = np.asarray(rhs, dtype=float)
    x = thomas(sub, diag, sup, rhs)
    r = rhs - matvec(sub, diag, sup, x)
    return x + thomas(sub, diag, sup, r)
