"""Per-tick trace storage, CSV round trip, and run metrics."""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = ("t", "agent", "x_true", "xbar", "xhat", "e_meas", "event")


class TraceError(ValueError):
    pass


@dataclass(eq=False)
class TraceLog:
    """Column store: ``t`` has one entry per tick, the rest are (ticks, agents)."""
    t: np.ndarray
    x_true: np.ndarray
    xbar: np.ndarray
    xhat: np.ndarray
    e_meas: np.ndarray
    event: np.ndarray
    metadata: dict = field(default_factory=dict)

    @classmethod
    def allocate(cls, ticks, n, metadata=None):
        z = lambda: np.zeros((ticks, n))
        return cls(np.zeros(ticks), z(), z(), z(), z(), np.zeros((ticks, n), dtype=np.int8),
                   dict(metadata or {}))

    def record(self, k, t, x_true, xbar, xhat, e_meas, event):
        self.t[k] = t
        self.x_true[k] = x_true
        self.xbar[k] = xbar
        self.xhat[k] = xhat
        self.e_meas[k] = e_meas
        self.event[k] = event

    @property
    def n_agents(self):
        return self.x_true.shape[1]

    @property
    def n_ticks(self):
        return self.t.shape[0]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        for k in range(self.n_ticks):
            t = repr(float(self.t[k]))
            for i in range(self.n_agents):
                buf.write(f"{t},{i},{float(self.x_true[k, i])!r},{float(self.xbar[k, i])!r},"
                          f"{float(self.xhat[k, i])!r},{float(self.e_meas[k, i])!r},"
                          f"{int(self.event[k, i])}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise TraceError(f"unexpected CSV header {header}")
        rows = [r for r in reader if r]
        if not rows:
            raise TraceError("trace has no rows")
        for idx, r in enumerate(rows):
            if len(r) != len(CSV_HEADER):
                raise TraceError(f"row {idx + 2}: expected {len(CSV_HEADER)} fields, got {len(r)}")
        try:
            agents = sorted({int(r[1]) for r in rows})
        except ValueError as exc:
            raise TraceError(f"bad agent id: {exc}") from exc
        n = len(agents)
        if agents != list(range(n)) or len(rows) % n:
            raise TraceError("trace rows do not cover agents 0..n-1 evenly")
        ticks = len(rows) // n
        tr = cls.allocate(ticks, n)
        for idx, r in enumerate(rows):
            k, i = divmod(idx, n)
            if int(r[1]) != i:
                raise TraceError(f"row {idx + 2}: expected agent {i}, got {r[1]}")
            try:
                tr.t[k] = float(r[0])
                tr.x_true[k, i] = float(r[2])
                tr.xbar[k, i] = float(r[3])
                tr.xhat[k, i] = float(r[4])
                tr.e_meas[k, i] = float(r[5])
                tr.event[k, i] = int(r[6])
            except ValueError as exc:
                raise TraceError(f"row {idx + 2}: {exc}") from exc
        return tr

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as f:
            return cls.from_csv(f.read())


def settling_time(t, values, target, band):
    """First time after which ``|values - target| <= band`` for the rest of the run.

    None if the last sample is still outside the band.
    """
    outside = np.nonzero(np.abs(values - target) > band)[0]
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last + 1 >= len(t):
        return None
    return float(t[last + 1])


def compute_metrics(trace, band):
    if trace.n_ticks == 0:
        raise TraceError("empty trace")
    if not band > 0:
        raise TraceError("band must be > 0")
    target = float(np.mean(trace.x_true[0]))
    per_agent = trace.event.sum(axis=0).astype(int)
    total = int(per_agent.sum())
    periodic = int(trace.n_ticks * trace.n_agents)
    return {
        "band": float(band),
        "target": target,
        "settling_time": [settling_time(trace.t, trace.xhat[:, i], target, band)
                          for i in range(trace.n_agents)],
        "total_events": total,
        "events_per_agent": [int(v) for v in per_agent],
        "periodic_equivalent_messages": periodic,
        "reduction_ratio": 1.0 - total / periodic,
        "final_error": [abs(float(trace.xhat[-1, i]) - target) for i in range(trace.n_agents)],
    }


def measurement_error_series(trace, agent):
    """``(t, e_i(t))`` for one agent."""
    if not 0 <= agent < trace.n_agents:
        raise TraceError(f"unknown agent {agent}")
    return trace.t.copy(), trace.e_meas[:, agent].copy()
