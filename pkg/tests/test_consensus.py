import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from etkfsim.consensus import (ConsensusError, ConsensusState, averaging_matrix,
                               consensus_step, euler_step_bound, integrate, steady_state_gain)
from etkfsim.graph import build_graph, laplacian, ring_graph
from oracles import edges_from_weights, random_balanced_weights

X0 = np.array([52.0, 44.0, 47.0, 48.0, 49.0])
PAIR_L = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_uniform_state_is_a_fixed_point():
    L = laplacian(ring_graph(5))
    s = ConsensusState(np.full(5, 3.5), np.full(5, 3.5))
    out = consensus_step(s, np.zeros(5), L, 0.1)
    np.testing.assert_array_equal(out.xbar, s.xbar)
    assert out.t == pytest.approx(0.1)


def test_pair_single_step():
    s = ConsensusState([52.0, 44.0], [52.0, 44.0])
    out = consensus_step(s, [0.0, 0.0], PAIR_L, 0.1)
    # 52 - 0.1 * (52 - 44) = 51.2 ; 44 + 0.8 = 44.8
    np.testing.assert_allclose(out.xbar, [51.2, 44.8], rtol=0, atol=1e-12)


def test_paper_ring_converges_to_48():
    L = laplacian(ring_graph(5))
    s = integrate(ConsensusState(X0, X0), np.zeros(5), L, 0.01, 3000)
    assert s.t == pytest.approx(30.0)
    assert np.max(np.abs(s.xbar - 48.0)) < 1e-6


def test_integrate_matches_repeated_steps():
    L = laplacian(ring_graph(5))
    xdot = np.array([0.3, -0.1, 0.0, 0.2, -0.4])
    s = ConsensusState(X0, X0)
    ref = s
    for _ in range(200):
        ref = consensus_step(ref, xdot, L, 0.01)
    out = integrate(s, xdot, L, 0.01, 200)
    np.testing.assert_allclose(out.xbar, ref.xbar, rtol=0, atol=1e-11)
    np.testing.assert_allclose(out.x, ref.x, rtol=0, atol=1e-11)


def test_step_bound_enforced():
    L = laplacian(ring_graph(5))
    assert euler_step_bound(L) == 0.5
    with pytest.raises(ConsensusError, match="0.5"):
        consensus_step(ConsensusState(X0, X0), np.zeros(5), L, 0.5)
    with pytest.raises(ConsensusError):
        consensus_step(ConsensusState(X0, X0), np.zeros(5), L, 0.0)


def test_dimension_mismatch():
    L = laplacian(ring_graph(5))
    with pytest.raises(ConsensusError):
        consensus_step(ConsensusState(X0, X0), np.zeros(4), L, 0.1)
    with pytest.raises(ConsensusError):
        consensus_step(ConsensusState(X0[:2], X0[:2]), np.zeros(2), L, 0.1)
    with pytest.raises(ConsensusError):
        ConsensusState([1.0, 2.0], [1.0])


def test_averaging_matrix():
    assert averaging_matrix(1).tolist() == [[1.0]]
    np.testing.assert_array_equal(averaging_matrix(5), np.full((5, 5), 0.2))
    Q = averaging_matrix(7)
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-15)
    with pytest.raises(ConsensusError):
        averaging_matrix(0)


def test_steady_state_gain_examples():
    assert steady_state_gain(np.zeros((1, 1)), 0.3).tolist() == [[1.0]]
    G = steady_state_gain(laplacian(ring_graph(5)), 1e-6)
    assert np.max(np.abs(G - averaging_matrix(5))) < 1e-5
    # 2 (2I + L)^-1 with (2I + L) = [[3, -1], [-1, 3]], inverse [[3, 1], [1, 3]] / 8
    np.testing.assert_allclose(steady_state_gain(PAIR_L, 2.0), [[0.75, 0.25], [0.25, 0.75]],
                               atol=1e-15)


def test_steady_state_gain_rejects_bad_input():
    with pytest.raises(ConsensusError):
        steady_state_gain(PAIR_L, 0.0)
    # -L is not a Laplacian; s I + (-L) is singular at s = 2 for the pair
    with pytest.raises(ConsensusError):
        steady_state_gain(-PAIR_L, 2.0)


def _random_balanced(seed, n):
    rng = np.random.default_rng(seed)
    w = random_balanced_weights(rng, n, directed=bool(seed % 2))
    return laplacian(build_graph(n, edges_from_weights(w))), rng


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_sum_conserved_on_balanced_graphs(n, seed):
    L, rng = _random_balanced(seed, n)
    h = 0.5 * euler_step_bound(L)
    x = rng.uniform(40, 56, n)
    s = ConsensusState(x, x)
    total = x.sum()
    for _ in range(100):
        s = consensus_step(s, np.zeros(n), L, h)
    assert abs(s.xbar.sum() - total) <= 100 * n * np.finfo(float).eps * np.abs(x).sum()


def _spectral_gap(L):
    ev = np.sort(np.linalg.eigvals(L).real)
    return ev[1]


def test_convergence_on_random_connected_balanced_graphs():
    # 1e-6 after 30 s needs a decay rate of about ln(8e6)/30 ~ 0.53 for an 8 V
    # spread, so graphs with a smaller spectral gap are redrawn.
    rng = np.random.default_rng(2024)
    done = 0
    while done < 20:
        n = int(rng.integers(2, 9))
        w = random_balanced_weights(rng, n, directed=bool(done % 2))
        L = laplacian(build_graph(n, edges_from_weights(w)))
        if _spectral_gap(L) < 0.6:
            continue
        h = min(0.01, 0.5 * euler_step_bound(L))
        x = rng.uniform(40, 56, n)
        s = integrate(ConsensusState(x, x), np.zeros(n), L, h, int(round(30.0 / h)))
        assert np.max(np.abs(s.xbar - x.mean())) < 1e-6, (done, n)
        done += 1


def test_sparse_directed_cycle_converges_slowly_but_surely():
    # unit directed 8-cycle: gap 1 - cos(pi/4) ~ 0.29, far from 1e-6 at 30 s
    n = 8
    L = laplacian(build_graph(n, [(k, (k + 1) % n, 1.0) for k in range(n)]))
    x = np.linspace(44, 52, n)
    errs = [np.max(np.abs(integrate(ConsensusState(x, x), np.zeros(n), L, 0.01,
                                    int(round(t / 0.01))).xbar - x.mean()))
            for t in (10.0, 30.0, 60.0)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def _exact_solution(L, xbar0, xdot, t):
    """xbar(t) = e^{-Lt} xbar0 + int_0^t e^{-L s} ds xdot via an augmented expm."""
    n = len(xbar0)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = -L
    M[:n, n] = xdot
    E = scipy.linalg.expm(M * t)
    return E[:n, :n] @ xbar0 + E[:n, n]


def test_euler_error_halves_with_step():
    L = laplacian(ring_graph(5))
    xdot = np.array([0.2, -0.1, 0.05, 0.0, -0.15])
    ref = _exact_solution(L, X0, xdot, 2.0)
    errs = []
    for h in (0.02, 0.01, 0.005):
        s = integrate(ConsensusState(X0, X0), xdot, L, h, int(round(2.0 / h)))
        errs.append(np.max(np.abs(s.xbar - ref)))
    assert errs[0] / errs[1] >= 2.0 and errs[1] / errs[2] >= 2.0, errs
