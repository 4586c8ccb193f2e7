"""Numeric inner loops, each in a numba flavour and a pure-numpy flavour.

The public names (``expm_scaled_taylor``, ``euler_consensus``, ``sod_replay``)
are bound at import time to the numba kernels or the numpy fallbacks, see
:mod:`etkfsim._backend`.  Both flavours stay importable under ``*_nb`` and
``*_np`` so they can be compared and benchmarked side by side.
"""
import math

import numpy as np

from ._backend import HAS_NUMBA, njit

# Taylor degree and scaled-norm target: 0.5**19 / 19! ~ 1.6e-23 truncation.
TAYLOR_DEGREE = 18
SCALED_NORM = 0.5


def _squarings(norm1):
    if not np.isfinite(norm1):
        raise ValueError("matrix has non-finite entries")
    if norm1 <= SCALED_NORM:
        return 0
    return int(math.ceil(math.log2(norm1 / SCALED_NORM)))


# --------------------------------------------------------------------------
# matrix exponential


@njit(cache=True)
def _matmul(a, b):
    n, m = a.shape
    k = b.shape[1]
    out = np.zeros((n, k))
    for i in range(n):
        for j in range(k):
            s = 0.0
            for r in range(m):
                s += a[i, r] * b[r, j]
            out[i, j] = s
    return out


@njit(cache=True)
def _expm_core_nb(m, squarings, degree):
    n = m.shape[0]
    x = m / (2.0 ** squarings)
    e = np.eye(n)
    for k in range(degree, 0, -1):
        xe = _matmul(x, e)
        for i in range(n):
            for j in range(n):
                e[i, j] = xe[i, j] / k
            e[i, i] += 1.0
    for _ in range(squarings):
        e = _matmul(e, e)
    return e


def _expm_core_np(m, squarings, degree):
    n = m.shape[0]
    x = m / (2.0 ** squarings)
    eye = np.eye(n)
    e = np.eye(n)
    for k in range(degree, 0, -1):
        e = eye + (x @ e) / k
    for _ in range(squarings):
        e = e @ e
    return e


def expm_nb(m):
    m = np.ascontiguousarray(m, dtype=np.float64)
    s = _squarings(np.abs(m).sum(axis=0).max() if m.size else 0.0)
    return _expm_core_nb(m, s, TAYLOR_DEGREE)


def expm_np(m):
    m = np.asarray(m, dtype=np.float64)
    s = _squarings(np.abs(m).sum(axis=0).max() if m.size else 0.0)
    return _expm_core_np(m, s, TAYLOR_DEGREE)


# --------------------------------------------------------------------------
# explicit Euler integration of xbar' = xdot - L xbar


@njit(cache=True)
def euler_consensus_nb(lap, xbar0, xdot, h, steps):
    n = xbar0.shape[0]
    xbar = xbar0.copy()
    nxt = np.empty(n)
    for _ in range(steps):
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += lap[i, j] * xbar[j]
            nxt[i] = xbar[i] + h * (xdot[i] - s)
        xbar[:] = nxt
    return xbar


def euler_consensus_np(lap, xbar0, xdot, h, steps):
    xbar = np.array(xbar0, dtype=np.float64)
    for _ in range(steps):
        xbar = xbar + h * (xdot - lap @ xbar)
    return xbar


# --------------------------------------------------------------------------
# send-on-delta replay over a (ticks, channels) sample matrix


@njit(cache=True)
def sod_replay_nb(samples, deltas):
    ticks, p = samples.shape
    events = np.zeros((ticks, p), dtype=np.bool_)
    held = np.empty((ticks, p))
    if ticks == 0:
        return events, held
    last = samples[0].copy()
    events[0, :] = True
    held[0] = last
    for t in range(1, ticks):
        for c in range(p):
            if abs(samples[t, c] - last[c]) > deltas[c]:
                last[c] = samples[t, c]
                events[t, c] = True
            held[t, c] = last[c]
    return events, held


def sod_replay_np(samples, deltas):
    samples = np.asarray(samples, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    ticks, p = samples.shape
    events = np.zeros((ticks, p), dtype=bool)
    held = np.empty((ticks, p))
    if ticks == 0:
        return events, held
    last = samples[0].copy()
    events[0] = True
    held[0] = last
    for t in range(1, ticks):
        fire = np.abs(samples[t] - last) > deltas
        last = np.where(fire, samples[t], last)
        events[t] = fire
        held[t] = last
    return events, held


if HAS_NUMBA:
    expm_scaled_taylor = expm_nb
    euler_consensus = euler_consensus_nb
    sod_replay = sod_replay_nb
else:
    expm_scaled_taylor = expm_np
    euler_consensus = euler_consensus_np
    sod_replay = sod_replay_np
