"""Experiment description and the tick-level multi-agent simulation loop."""
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import estimator as etkf
from .graph import GraphError, degrees, graph_from_spec, is_connected
from .netsim import MessageBus
from .sod import SodGate, evaluate
from .trace import TraceLog

PAPER_INITIAL_STATES = (52.0, 44.0, 47.0, 48.0, 49.0)
PAPER_RING = {"n": 5, "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0], [4, 0, 1.0]],
              "undirected": True}

STATE = "state"
AVERAGE = "average"


class ConfigError(ValueError):
    pass


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    graph: dict = field(default_factory=lambda: json.loads(json.dumps(PAPER_RING)))
    initial_states: tuple = PAPER_INITIAL_STATES
    delta_voltage: float = 0.1
    delta_energy: float = 0.01
    Q: float = 0.0
    R: float = 1.0
    period_s: float = 1.0
    tick_s: float = 0.01
    duration_s: float = 30.0
    delay_ms: float = 0.0
    drop_probability: float = 0.0
    seed: int = 42
    measurement_noise_std: float = 0.0
    link_delays_ms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "initial_states",
                           tuple(float(v) for v in self.initial_states))
        object.__setattr__(self, "link_delays_ms",
                           tuple(tuple(e) for e in self.link_delays_ms))

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        validate(cfg)
        return cfg

    def to_dict(self):
        d = asdict(self)
        d["initial_states"] = list(self.initial_states)
        d["link_delays_ms"] = [list(e) for e in self.link_delays_ms]
        return d

    def to_json(self):
        """Canonical JSON: sorted keys, no whitespace variation."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @property
    def n_ticks(self):
        return int(round(self.duration_s / self.tick_s))

    @property
    def ticks_per_period(self):
        return int(round(self.period_s / self.tick_s))


def validate(cfg):
    """Raise ConfigError unless every config invariant holds.  Returns the graph."""
    def need(ok, msg):
        if not ok:
            raise ConfigError(msg)

    for name in ("delta_voltage", "delta_energy", "Q", "R", "period_s", "tick_s",
                 "duration_s", "delay_ms", "drop_probability", "measurement_noise_std"):
        v = getattr(cfg, name)
        need(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
             f"{name} must be a finite number, got {v!r}")
    need(isinstance(cfg.seed, int) and not isinstance(cfg.seed, bool) and cfg.seed >= 0,
         f"seed must be a non-negative integer, got {cfg.seed!r}")
    need(cfg.duration_s > 0, "duration_s must be > 0")
    need(cfg.tick_s > 0, "tick_s must be > 0")
    need(cfg.tick_s <= cfg.period_s, "tick_s must not exceed period_s")
    ratio = cfg.period_s / cfg.tick_s
    need(abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio),
         "tick_s must divide period_s")
    need(cfg.delay_ms >= 0, f"delay_ms must be >= 0, got {cfg.delay_ms}")
    need(0.0 <= cfg.drop_probability <= 1.0, "drop_probability must lie in [0, 1]")
    need(cfg.delta_voltage >= 0 and cfg.delta_energy >= 0, "deltas must be >= 0")
    need(cfg.R > 0, "R must be > 0")
    need(cfg.Q >= 0, "Q must be >= 0")
    need(cfg.measurement_noise_std >= 0, "measurement_noise_std must be >= 0")
    need(all(math.isfinite(v) for v in cfg.initial_states), "initial_states must be finite")
    try:
        g = graph_from_spec(cfg.graph)
    except GraphError as exc:
        raise ConfigError(f"graph: {exc}") from exc
    need(g.n == len(cfg.initial_states),
         f"graph has {g.n} agents but initial_states has {len(cfg.initial_states)}")
    need(is_connected(g), "graph must contain a directed spanning tree")
    d_in, _ = degrees(g)
    need(np.all(d_in > 0), "every agent needs at least one neighbour")
    need(cfg.tick_s * d_in.max() < 1.0,
         f"tick_s must be < 1/max in-degree = {1.0 / d_in.max()}")
    for e in cfg.link_delays_ms:
        need(len(e) == 3 and 0 <= e[0] < g.n and 0 <= e[1] < g.n and e[2] >= 0,
             f"bad link delay entry {list(e)}")
    return g


def paper_scenario(delayed=False):
    """Five agents on the ring, x0 = [52, 44, 47, 48, 49], delta 0.1 V, Q = 0, R = 1, T = 1 s."""
    return ScenarioConfig(delay_ms=150.0 if delayed else 0.0)


BUILTIN_SCENARIOS = {
    "paper-5agent": lambda: paper_scenario(False),
    "paper-5agent-delayed": lambda: paper_scenario(True),
}


def run_scenario(cfg):
    """Simulate ``cfg`` and return the per-tick trace.

    Each tick: agents integrate x' = u with u built from held broadcast states,
    advance their average-consensus estimate, run their send-on-delta gates,
    then the bus delivers what is due.  Every ``period_s`` each agent's filter
    runs its measurement update and projects ahead.
    """
    g = validate(cfg)
    n, h = g.n, cfg.tick_s
    W = g.weights
    d_in, _ = degrees(g)
    nbrs = [g.neighbors(i) for i in range(n)]
    listeners = [g.listeners(i) for i in range(n)]
    chan_of = [{j: c + 1 for c, j in enumerate(nbrs[i])} for i in range(n)]

    rng = np.random.default_rng(cfg.seed)
    bus = MessageBus(n, cfg.delay_ms / 1000.0, cfg.drop_probability, cfg.seed + 1,
                     {(int(a), int(b)): ms / 1000.0 for a, b, ms in cfg.link_delays_ms})
    noise = cfg.measurement_noise_std

    x = np.array(cfg.initial_states)
    xbar = x.copy()
    # held[i, j]: latest value agent i has received from agent j (own value until then)
    held_state = np.repeat(x[:, None], n, axis=1)
    held_avg = held_state.copy()

    state_gates = [SodGate(cfg.delta_voltage, sender=i, channel=STATE) for i in range(n)]
    avg_gates = [SodGate(cfg.delta_voltage, sender=i, channel=AVERAGE) for i in range(n)]
    models = [etkf.consensus_realization(i, g, R=cfg.R, Q=cfg.Q, T=cfg.period_s,
                                         delta=cfg.delta_voltage) for i in range(n)]
    filters = [None] * n
    pending = [[None] * m.p for m in models]
    xhat = np.empty(n)

    ticks, per = cfg.n_ticks, cfg.ticks_per_period
    trace = TraceLog.allocate(ticks, n, metadata={
        "config_hash": cfg.config_hash(), "seed": cfg.seed, "delay_ms": cfg.delay_ms,
        "delta": cfg.delta_voltage})

    for k in range(ticks):
        t = round(k * h, 12)
        if k > 0:
            u = (W * held_state).sum(axis=1) - d_in * np.diag(held_state)
            x_new = x + h * u
            xdot = (x_new - x) / h
            flow = d_in * xbar - (W * held_avg).sum(axis=1)
            xbar = xbar + h * (xdot - flow)
            x = x_new

        y = x + rng.normal(0.0, noise, n) if noise > 0 else x
        fired = np.zeros(n, dtype=np.int8)
        for i in range(n):
            msg, state_gates[i] = evaluate(state_gates[i], y[i], t)
            if msg is not None:
                fired[i] = 1
                bus.publish(msg, [i] + listeners[i], t)
            msg, avg_gates[i] = evaluate(avg_gates[i], xbar[i], t)
            if msg is not None:
                bus.publish(msg, listeners[i], t)

        for r, msgs in bus.deliver_due(t).items():
            for msg in msgs:
                s = msg.sender
                if msg.channel == STATE:
                    held_state[r, s] = msg.value
                    if s == r:
                        pending[r][0] = msg.value
                else:
                    held_avg[r, s] = msg.value
                    pending[r][chan_of[r][s]] = msg.value

        if k % per == 0:
            for i in range(n):
                try:
                    if filters[i] is None:
                        filters[i] = etkf.initial_state(models[i], [y[i]])
                    x_post, P_post, st = etkf.measurement_update(filters[i], models[i], pending[i])
                    filters[i] = etkf.project_ahead(st, models[i], x_post, P_post, u=st.y_last[1:])
                except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
                    raise ScenarioError(f"filter failure at t={t} agent={i}: {exc}") from exc
                xhat[i] = x_post[0]
                pending[i] = [None] * models[i].p

        trace.record(k, t, x, xbar, xhat, np.diag(held_state) - x, fired)
    return trace
