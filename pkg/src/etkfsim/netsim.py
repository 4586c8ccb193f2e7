"""Deterministic message bus with a fixed delivery delay and seeded drops."""
import heapq
import itertools
from collections import defaultdict

import numpy as np

# Slack when comparing float delivery times against the tick clock.
TIME_EPS = 1e-9


class BusError(ValueError):
    pass


class MessageBus:
    """In-flight messages ordered by (deliver_at, publication order).

    ``link_delays`` optionally maps ``(sender, recipient)`` to a delay in
    seconds that overrides ``default_delay`` for that link.
    """

    def __init__(self, n_agents, default_delay=0.0, drop_probability=0.0, seed=0,
                 link_delays=None):
        if default_delay < 0:
            raise BusError("delay must be >= 0")
        if not 0.0 <= drop_probability <= 1.0:
            raise BusError("drop_probability must lie in [0, 1]")
        self.n_agents = n_agents
        self.default_delay = float(default_delay)
        self.drop_probability = float(drop_probability)
        self.link_delays = dict(link_delays or {})
        self._rng = np.random.default_rng(seed)
        self._queue = []
        self._order = itertools.count()
        self._last_publish = -np.inf
        self.published = 0
        self.delivered = 0
        self.dropped = 0

    def __len__(self):
        return len(self._queue)

    @property
    def in_flight(self):
        return [(at, to, msg) for at, _, to, msg in sorted(self._queue)]

    def publish(self, msg, recipients, now):
        if now < self._last_publish:
            raise BusError(f"publish time went backwards: {now} < {self._last_publish}")
        self._last_publish = now
        for to in recipients:
            if not 0 <= to < self.n_agents:
                raise BusError(f"unknown recipient {to}")
            self.published += 1
            if self.drop_probability > 0 and self._rng.random() < self.drop_probability:
                self.dropped += 1
                continue
            delay = self.link_delays.get((msg.sender, to), self.default_delay)
            heapq.heappush(self._queue, (now + delay, next(self._order), to, msg))
        return self

    def deliver_due(self, now):
        """Pop everything due by ``now``; returns ``{recipient: [msg, ...]}``."""
        out = defaultdict(list)
        while self._queue and self._queue[0][0] <= now + TIME_EPS:
            _, _, to, msg = heapq.heappop(self._queue)
            out[to].append(msg)
            self.delivered += 1
        return dict(out)
