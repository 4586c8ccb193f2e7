"""Event-triggered Kalman filter for send-on-delta measurement channels.

A channel that delivered nothing since the last update keeps its previous
value in ``y_last`` and has its measurement variance inflated by delta^2/3,
the variance of an error uniformly spread over [-delta, delta].

The filter runs at period ``T``::

    state = initial_state(model, x0)
    x_post, P_post, state = measurement_update(state, model, received)
    state = project_ahead(state, model, x_post, P_post)
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .graph import degrees


class EstimatorError(ArithmeticError):
    pass


def matrix_exponential(m, t=1.0):
    """e^{M t} by scaling and squaring a truncated Taylor series."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    return kernels.expm_scaled_taylor(m * t)


def discretize_process_noise(a, q, t):
    """Q_d = int_0^T e^{A s} Q e^{A' s} ds via the Van Loan block exponential."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -a
    block[:n, n:] = q
    block[n:, n:] = a.T
    e = matrix_exponential(block, t)
    qd = e[n:, n:].T @ e[:n, n:]
    return 0.5 * (qd + qd.T)


def input_gain(a, b, t):
    """Zero-order-hold input matrix int_0^T e^{A s} ds B."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    n, m = b.shape
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a
    block[:n, n:] = b
    return matrix_exponential(block, t)[:n, n:]


@dataclass(frozen=True, eq=False)
class EtkfModel:
    """Filter parameters.

    ``B`` is optional: when given, ``project_ahead`` accepts an input vector
    held constant over the period.
    """
    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    T: float
    deltas: np.ndarray
    B: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        c = np.atleast_2d(np.asarray(self.C, dtype=np.float64))
        q = np.atleast_2d(np.asarray(self.Q, dtype=np.float64))
        r = np.atleast_2d(np.asarray(self.R, dtype=np.float64))
        deltas = np.atleast_1d(np.asarray(self.deltas, dtype=np.float64))
        n, p = a.shape[0], c.shape[0]
        if a.shape != (n, n) or c.shape != (p, n) or q.shape != (n, n) or r.shape != (p, p):
            raise ValueError(
                f"inconsistent shapes A{a.shape} C{c.shape} Q{q.shape} R{r.shape}")
        if deltas.shape != (p,):
            raise ValueError(f"need one delta per channel ({p}), got {deltas.shape}")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if np.any(deltas < 0):
            raise ValueError("deltas must be >= 0")
        if not (np.allclose(q, q.T) and np.allclose(r, r.T)):
            raise ValueError("Q and R must be symmetric")
        if np.any(np.diag(r) <= 0):
            raise ValueError("R needs a strictly positive diagonal")
        fields = {"A": a, "C": c, "Q": q, "R": r, "deltas": deltas}
        if self.B is not None:
            b = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
            if b.shape[0] != n:
                raise ValueError(f"B must have {n} rows, got {b.shape}")
            fields["B"] = b
        for name, value in fields.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.C.shape[0]

    @cached_property
    def transition(self):
        return matrix_exponential(self.A, self.T)

    @cached_property
    def process_noise(self):
        return discretize_process_noise(self.A, self.Q, self.T)

    @cached_property
    def input_matrix(self):
        if self.B is None:
            return None
        return input_gain(self.A, self.B, self.T)


@dataclass(frozen=True, eq=False)
class EtkfState:
    x_pred: np.ndarray
    P_pred: np.ndarray
    y_last: np.ndarray
    k: int = 0


def initial_state(model, x0, P0=None):
    """Prior at k=0; ``y_last`` starts at C x0 and ``P0`` defaults to 10 I."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if x0.shape != (model.n,):
        raise ValueError(f"x0 must have length {model.n}")
    P0 = 10.0 * np.eye(model.n) if P0 is None else np.atleast_2d(np.asarray(P0, dtype=np.float64))
    return EtkfState(x0.copy(), P0.copy(), model.C @ x0, 0)


def inflate_measurement_covariance(R, received, deltas):
    r_bar = np.array(np.atleast_2d(R), dtype=np.float64)
    received = np.asarray(received, dtype=bool)
    deltas = np.asarray(deltas, dtype=np.float64)
    if received.shape != (r_bar.shape[0],) or deltas.shape != received.shape:
        raise ValueError("R, received and deltas dimensions disagree")
    for i in np.nonzero(~received)[0]:
        r_bar[i, i] += deltas[i] * deltas[i] / 3.0
    return r_bar


def measurement_update(state, model, received: Sequence[Optional[float]]):
    """Correct the prior with the channels in ``received`` (None = nothing new).

    Returns ``(x_post, P_post, state)`` where ``state`` carries the refreshed
    ``y_last``; its prior fields are untouched until ``project_ahead``.
    """
    if len(received) != model.p:
        raise ValueError(f"expected {model.p} channel entries, got {len(received)}")
    y_last = state.y_last.copy()
    r_bar = model.R.copy()
    for i, v in enumerate(received):
        if v is None:
            r_bar[i, i] += model.deltas[i] * model.deltas[i] / 3.0
        else:
            y_last[i] = v

    C, P = model.C, state.P_pred
    S = C @ P @ C.T + r_bar
    if not np.all(np.isfinite(S)):
        raise EstimatorError(f"innovation covariance is not finite at step {state.k}")
    w = np.linalg.eigvalsh(S)
    if w[0] <= 1e-14 * w[-1]:
        raise EstimatorError(f"innovation covariance is singular at step {state.k}")
    K = np.linalg.solve(S, C @ P).T
    x_post = state.x_pred + K @ (y_last - C @ state.x_pred)
    P_post = (np.eye(model.n) - K @ C) @ P
    P_post = 0.5 * (P_post + P_post.T)
    return x_post, P_post, EtkfState(state.x_pred, state.P_pred, y_last, state.k)


def project_ahead(state, model, x_post, P_post, u=None):
    phi = model.transition
    x_pred = phi @ x_post
    if u is not None:
        if model.input_matrix is None:
            raise ValueError("model has no input matrix B")
        x_pred = x_pred + model.input_matrix @ np.atleast_1d(np.asarray(u, dtype=np.float64))
    P_pred = phi @ P_post @ phi.T + model.process_noise
    return EtkfState(x_pred, P_pred, state.y_last, state.k + 1)


def consensus_realization(agent, g, R=1.0, Q=0.0, T=1.0, delta=0.1):
    """Scalar filter tracking agent ``agent``'s estimate of the network average.

    State: own average estimate.  Channel 0 is the agent's own sensor, channels
    1.. are the neighbours' average estimates in increasing index order, all
    observing the state directly.  The neighbour terms a_ij * xbar_j of the
    protocol also drive the prediction through ``B``, fed with the held
    neighbour values.
    """
    d_in, _ = degrees(g)
    if not 0 <= agent < g.n:
        raise ValueError(f"agent {agent} out of range")
    if d_in[agent] <= 0:
        raise ValueError(f"agent {agent} is isolated (zero in-degree)")
    nbrs = g.neighbors(agent)
    p = 1 + len(nbrs)
    return EtkfModel(
        A=[[-d_in[agent]]],
        C=np.ones((p, 1)),
        Q=[[Q]],
        R=R * np.eye(p),
        T=T,
        deltas=np.full(p, delta),
        B=[[g.weights[agent, j] for j in nbrs]],
    )
