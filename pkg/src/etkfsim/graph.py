"""Weighted directed communication graph between estimation agents.

Convention: ``weights[i, j] > 0`` means agent ``i`` listens to agent ``j``
(information flows j -> i), so row ``i`` lists the neighbours of ``i``.
"""
from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    """Invalid graph construction input."""


@dataclass(frozen=True, eq=False)
class CommGraph:
    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.n, self.n):
            raise GraphError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite and non-negative")
        if np.any(np.diag(w) != 0):
            raise GraphError("weights must have a zero diagonal")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def neighbors(self, i):
        """Agents that ``i`` receives from, in increasing index order."""
        return [int(j) for j in np.nonzero(self.weights[i])[0]]

    def listeners(self, j):
        """Agents that receive from ``j``."""
        return [int(i) for i in np.nonzero(self.weights[:, j])[0]]


def build_graph(n, edges, undirected=False):
    """Build a graph from ``(from_j, to_i, weight)`` triples.

    With ``undirected=True`` every edge is mirrored with the same weight.
    """
    if n < 1:
        raise GraphError(f"agent count must be >= 1, got {n}")
    w = np.zeros((n, n))
    seen = set()
    arcs = []
    for edge in edges:
        j, i, weight = edge
        arcs.append((j, i, weight))
        if undirected:
            arcs.append((i, j, weight))
    for j, i, weight in arcs:
        edge = (j, i, weight)
        if int(j) != j or int(i) != i or not (0 <= j < n and 0 <= i < n):
            raise GraphError(f"edge {edge}: index out of range for n={n}")
        j, i = int(j), int(i)
        if i == j:
            raise GraphError(f"edge {edge}: self-loop")
        if not np.isfinite(weight) or weight <= 0:
            raise GraphError(f"edge {edge}: weight must be positive")
        if (j, i) in seen:
            raise GraphError(f"edge {edge}: duplicate edge {j}->{i}")
        seen.add((j, i))
        w[i, j] = float(weight)
    return CommGraph(n, w)


def ring_graph(n, weight=1.0):
    """Undirected ring 0-1-...-(n-1)-0 (a single arc pair for n=2)."""
    if n < 2:
        return build_graph(n, [])
    pairs = {tuple(sorted((k, (k + 1) % n))) for k in range(n)}
    return build_graph(n, [(a, b, weight) for a, b in sorted(pairs)], undirected=True)


def degrees(g):
    """Return ``(in_degrees, out_degrees)``: row sums and column sums."""
    return g.weights.sum(axis=1), g.weights.sum(axis=0)


def laplacian(g):
    d_in, _ = degrees(g)
    return np.diag(d_in) - g.weights


def is_balanced(g, tol=1e-12):
    if tol < 0:
        raise ValueError("tol must be >= 0")
    d_in, d_out = degrees(g)
    return bool(np.all(np.abs(d_in - d_out) <= tol))


def _reachable_from(g, root):
    seen = {root}
    stack = [root]
    while stack:
        j = stack.pop()
        for i in g.listeners(j):
            if i not in seen:
                seen.add(i)
                stack.append(i)
    return seen


def is_connected(g):
    """True iff some root reaches every agent along the information flow."""
    return any(len(_reachable_from(g, r)) == g.n for r in range(g.n))


def graph_from_spec(spec):
    """Build a graph from its JSON mapping ``{"n", "edges", "undirected"}``."""
    try:
        n = int(spec["n"])
        edges = [tuple(e) for e in spec.get("edges", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph section: {exc}") from exc
    for e in edges:
        if len(e) != 3:
            raise GraphError(f"edge {list(e)}: expected [from, to, weight]")
    return build_graph(n, edges, undirected=bool(spec.get("undirected", False)))
