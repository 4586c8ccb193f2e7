"""Independent reference implementations used only by the tests.

Nothing here imports etkfsim; matrix functions come from scipy.
"""
import numpy as np
import scipy.linalg


def textbook_kf(A, C, Q, R, T, x0, P0, ys):
    """Periodic discrete Kalman filter (update then predict) on samples ``ys``.

    Returns arrays of posterior means and covariances, one per sample.
    """
    n = A.shape[0]
    F = scipy.linalg.expm(A * T)
    # Van Loan: expm([[-A, Q], [0, A']] T) -> Qd = F22' F12
    M = np.block([[-A, Q], [np.zeros((n, n)), A.T]]) * T
    E = scipy.linalg.expm(M)
    Qd = E[n:, n:].T @ E[:n, n:]
    x, P = x0.astype(float).copy(), P0.astype(float).copy()
    xs, Ps = [], []
    for y in ys:
        S = C @ P @ C.T + R
        K = P @ C.T @ np.linalg.inv(S)
        x = x + K @ (y - C @ x)
        P = (np.eye(n) - K @ C) @ P
        xs.append(x.copy())
        Ps.append(P.copy())
        x = F @ x
        P = F @ P @ F.T + Qd
    return np.array(xs), np.array(Ps)


def random_stable_model(rng, n, p):
    """Random (A, C, Q, R, T) with Hurwitz A and positive definite R."""
    M = rng.normal(size=(n, n))
    A = M - (np.max(np.real(np.linalg.eigvals(M))) + rng.uniform(0.1, 1.0)) * np.eye(n)
    C = rng.normal(size=(p, n))
    G = rng.normal(size=(n, n))
    Q = 0.1 * G @ G.T
    H = rng.normal(size=(p, p))
    R = 0.5 * H @ H.T + 0.5 * np.eye(p)
    T = rng.uniform(0.1, 1.0)
    return A, C, Q, R, T


def random_balanced_weights(rng, n, directed):
    """Connected balanced weight matrix (w[i, j] = weight of arc j -> i).

    Undirected: random spanning tree plus extra symmetric edges.
    Directed: a Hamiltonian cycle plus extra random cycles; each cycle adds
    equal in- and out-degree to its nodes, so the sum stays balanced.
    """
    w = np.zeros((n, n))
    if n == 1:
        return w
    if directed:
        cycles = [list(rng.permutation(n))]
        for _ in range(rng.integers(0, 3)):
            k = int(rng.integers(2, n + 1))
            cycles.append(list(rng.choice(n, size=k, replace=False)))
        for cyc in cycles:
            wt = rng.uniform(0.5, 2.0)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                w[b, a] += wt
    else:
        order = rng.permutation(n)
        for k in range(1, n):
            a, b = order[k], order[rng.integers(0, k)]
            w[a, b] = w[b, a] = rng.uniform(0.5, 2.0)
        for _ in range(rng.integers(0, n)):
            a, b = rng.choice(n, size=2, replace=False)
            w[a, b] = w[b, a] = rng.uniform(0.5, 2.0)
    return w


def edges_from_weights(w):
    return [(int(j), int(i), float(w[i, j])) for i, j in zip(*np.nonzero(w))]


def reachable_all(w, root):
    """Brute-force breadth-first reachability along arcs j -> i (w[i, j] > 0)."""
    n = w.shape[0]
    seen = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for j in frontier:
            for i in range(n):
                if w[i, j] > 0 and i not in seen:
                    seen.add(i)
                    nxt.append(i)
        frontier = nxt
    return len(seen) == n
