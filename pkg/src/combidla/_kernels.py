"""Compiled random-walk kernels shared by the walk, idla and flashing modules.

An occupied set ("cluster") is encoded by an axis interval [lo, hi] and per
column tooth heights ``up[c]``, ``dn[c]`` with ``c = x + off``.  It must be
parent-closed.  Stop sites are stored per column in CSR form: entries
``sy[ptr[c]:ptr[c + 1]]`` are signed heights (0 for the axis) and ``son`` marks
which of them are still active.

The walk starts at (x, y).  If that site is unoccupied the walk ends at once.
Otherwise it moves until it first arrives (at a time >= 1) either at an active
stop site or at an unoccupied site; the stop check takes precedence.  With
``record`` set, stop sites are marked as hit (``son`` cleared) and the walk
carries on.

Return codes: 0 = ended on an unoccupied site, 1 = ended on a stop site.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EXIT = 0
STOPPED = 1

_CONTINUE = 0
_RET_STOP = 1
_RET_EXIT = 2


@njit(cache=True)
def occupied(x, y, lo, hi, up, dn, off):
    if x < lo or x > hi:
        return False
    if y == 0:
        return True
    c = x + off
    if y > 0:
        return y <= up[c]
    return -y <= dn[c]


@njit(cache=True)
def stop_index(x, y, ptr, sy, son, off):
    c = x + off
    if c < 0 or c + 1 >= ptr.shape[0]:
        return -1
    for k in range(ptr[c], ptr[c + 1]):
        if son[k] and sy[k] == y:
            return k
    return -1


@njit(cache=True)
def _arrive(x, y, lo, hi, up, dn, off, ptr, sy, son, record):
    k = stop_index(x, y, ptr, sy, son, off)
    if k >= 0:
        if not record:
            return _RET_STOP
        son[k] = False
    if not occupied(x, y, lo, hi, up, dn, off):
        return _RET_EXIT
    return _CONTINUE


@njit(cache=True)
def _tooth_barriers(x, s, a, m, ptr, sy, son, off):
    """Nearest active stops below and above height a on side s of column x.

    Returns (low, top): low is the highest active stop in [1, a-1] or 0 for
    the base; top is the lowest active stop in [a+1, m+1] or m+1.
    """
    low = 0
    top = m + 1
    c = x + off
    if c < 0 or c + 1 >= ptr.shape[0]:
        return low, top
    for k in range(ptr[c], ptr[c + 1]):
        if not son[k]:
            continue
        h = sy[k] * s
        if h <= 0:
            continue
        if h < a and h > low:
            low = h
        elif h > a and h < top:
            top = h
    return low, top


@njit(cache=True)
def walk_shortcut(x, y, lo, hi, up, dn, off, ptr, sy, son, record, rng):
    """Walk with each tooth visit resolved by one gambler's-ruin draw.

    Returns (x, y, code, events).
    """
    events = 0
    if not occupied(x, y, lo, hi, up, dn, off):
        return x, y, EXIT, events
    while True:
        if y == 0:
            k = int(rng.random() * 4.0)
            events += 1
            if k == 0:
                x += 1
            elif k == 1:
                x -= 1
            elif k == 2:
                y = 1
            else:
                y = -1
            st = _arrive(x, y, lo, hi, up, dn, off, ptr, sy, son, record)
            if st == _RET_STOP:
                return x, y, STOPPED, events
            if st == _RET_EXIT:
                return x, y, EXIT, events
            continue
        # on an occupied tooth site
        s = 1 if y > 0 else -1
        a = y * s
        c = x + off
        m = up[c] if s > 0 else dn[c]
        if stop_index(x, y, ptr, sy, son, off) >= 0:
            # only possible at the start: take one plain step off the stop
            events += 1
            if rng.random() < 0.5:
                y += 1
            else:
                y -= 1
            st = _arrive(x, y, lo, hi, up, dn, off, ptr, sy, son, record)
            if st == _RET_STOP:
                return x, y, STOPPED, events
            if st == _RET_EXIT:
                return x, y, EXIT, events
            continue
        low, top = _tooth_barriers(x, s, a, m, ptr, sy, son, off)
        events += 1
        if rng.random() * (top - low) < (a - low):
            y = s * top
        else:
            y = s * low
        st = _arrive(x, y, lo, hi, up, dn, off, ptr, sy, son, record)
        if st == _RET_STOP:
            return x, y, STOPPED, events
        if st == _RET_EXIT:
            return x, y, EXIT, events


@njit(cache=True)
def walk_naive(x, y, lo, hi, up, dn, off, ptr, sy, son, record, rng):
    """Step-by-step reference walk with the same contract as walk_shortcut."""
    events = 0
    if not occupied(x, y, lo, hi, up, dn, off):
        return x, y, EXIT, events
    while True:
        events += 1
        if y == 0:
            k = int(rng.random() * 4.0)
            if k == 0:
                x += 1
            elif k == 1:
                x -= 1
            elif k == 2:
                y = 1
            else:
                y = -1
        elif rng.random() < 0.5:
            y += 1
        else:
            y -= 1
        st = _arrive(x, y, lo, hi, up, dn, off, ptr, sy, son, record)
        if st == _RET_STOP:
            return x, y, STOPPED, events
        if st == _RET_EXIT:
            return x, y, EXIT, events


@njit(cache=True)
def walk(x, y, lo, hi, up, dn, off, ptr, sy, son, record, naive, rng):
    if naive:
        return walk_naive(x, y, lo, hi, up, dn, off, ptr, sy, son, record, rng)
    return walk_shortcut(x, y, lo, hi, up, dn, off, ptr, sy, son, record, rng)


@njit(cache=True)
def sample_endpoints(x0, y0, count, lo, hi, up, dn, off, ptr, sy, son, naive, rng):
    """Run ``count`` independent walks from (x0, y0); stop flags are reset each run."""
    xs = np.empty(count, np.int64)
    ys = np.empty(count, np.int64)
    codes = np.empty(count, np.int8)
    fresh = son.copy()
    for i in range(count):
        son[:] = fresh
        ex, ey, code, _ = walk(x0, y0, lo, hi, up, dn, off, ptr, sy, son, False, naive, rng)
        xs[i] = ex
        ys[i] = ey
        codes[i] = code
    son[:] = fresh
    return xs, ys, codes


@njit(cache=True)
def sample_excursions(height, count, rng):
    """Number of absorbed excursions out of ``count`` entries at height 1 of a tooth
    whose absorbing height is ``height``."""
    hits = 0
    for _ in range(count):
        if rng.random() * height < 1.0:
            hits += 1
    return hits


@njit(cache=True)
def sample_steps(x, y, count, rng):
    """Displacements of ``count`` single naive steps from (x, y)."""
    xs = np.empty(count, np.int64)
    ys = np.empty(count, np.int64)
    for i in range(count):
        if y == 0:
            k = int(rng.random() * 4.0)
            if k == 0:
                xs[i], ys[i] = x + 1, 0
            elif k == 1:
                xs[i], ys[i] = x - 1, 0
            elif k == 2:
                xs[i], ys[i] = x, 1
            else:
                xs[i], ys[i] = x, -1
        elif rng.random() < 0.5:
            xs[i], ys[i] = x, y + 1
        else:
            xs[i], ys[i] = x, y - 1
    return xs, ys
