"""Dynamic average consensus: Euler stepping of xbar' = xdot - L xbar and the
steady-state gain checks used as oracles for it."""
from dataclasses import dataclass

import numpy as np

from . import kernels


class ConsensusError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConsensusState:
    x: np.ndarray
    xbar: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        xbar = np.asarray(self.xbar, dtype=np.float64)
        if x.ndim != 1 or x.shape != xbar.shape or x.size < 1:
            raise ConsensusError(
                f"x and xbar must be equal-length vectors, got {x.shape} and {xbar.shape}")
        if self.t < 0:
            raise ConsensusError("t must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xbar", xbar)


def euler_step_bound(lap):
    """Largest admissible step: 1 / max in-degree (inf for an edgeless graph)."""
    dmax = float(np.max(np.diag(lap))) if len(lap) else 0.0
    return np.inf if dmax <= 0 else 1.0 / dmax


def _check(lap, n, h):
    lap = np.asarray(lap, dtype=np.float64)
    if lap.shape != (n, n):
        raise ConsensusError(f"Laplacian shape {lap.shape} does not match n={n}")
    bound = euler_step_bound(lap)
    if not (h > 0 and h < bound):
        raise ConsensusError(f"step h={h} outside stability range (0, {bound})")
    return lap


def consensus_step(state, xdot, lap, h):
    """One explicit Euler step of the global protocol dynamics."""
    n = state.x.size
    xdot = np.asarray(xdot, dtype=np.float64)
    if xdot.shape != (n,):
        raise ConsensusError(f"xdot shape {xdot.shape} does not match n={n}")
    lap = _check(lap, n, h)
    xbar = state.xbar + h * (xdot - lap @ state.xbar)
    return ConsensusState(state.x + h * xdot, xbar, state.t + h)


def integrate(state, xdot, lap, h, steps):
    """Apply ``steps`` Euler steps with a constant ``xdot``.

    Runs on the compiled kernel; ``consensus_step`` is the per-step reference.
    """
    n = state.x.size
    xdot = np.asarray(xdot, dtype=np.float64)
    if xdot.shape != (n,):
        raise ConsensusError(f"xdot shape {xdot.shape} does not match n={n}")
    lap = _check(lap, n, h)
    xbar = kernels.euler_consensus(np.ascontiguousarray(lap), state.xbar, xdot, float(h), int(steps))
    return ConsensusState(state.x + steps * h * xdot, xbar, state.t + steps * h)


def averaging_matrix(n):
    if n < 1:
        raise ConsensusError("averaging matrix needs n >= 1")
    return np.full((n, n), 1.0 / n)


def steady_state_gain(lap, s=1e-6):
    """Evaluate s (sI + L)^-1 at a real frequency ``s > 0``."""
    if not s > 0:
        raise ConsensusError("s must be positive")
    lap = np.asarray(lap, dtype=np.float64)
    n = lap.shape[0]
    m = s * np.eye(n) + lap
    try:
        inv = np.linalg.solve(m, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise ConsensusError(f"sI + L is singular at s={s}") from exc
    if not np.all(np.isfinite(inv)):
        raise ConsensusError(f"sI + L inverse is not finite at s={s}")
    return s * inv
