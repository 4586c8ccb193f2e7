"""Send-on-delta transmission gates."""
import math
from dataclasses import dataclass, replace
from typing import Optional


class SodError(ValueError):
    pass


@dataclass(frozen=True)
class EventMessage:
    sender: int
    channel: str
    value: float
    sent_at: float


@dataclass(frozen=True)
class SodGate:
    """Gate for one channel.  ``last_sent`` is None until the first send."""
    delta: float
    last_sent: Optional[float] = None
    last_sent_time: float = 0.0
    sender: int = 0
    channel: str = "state"

    def __post_init__(self):
        if not self.delta >= 0:
            raise SodError(f"delta must be >= 0, got {self.delta}")


def evaluate(gate, y, t):
    """Return ``(message_or_None, gate)``.

    Transmits when ``|y - last_sent| > delta`` (strictly), and always on the
    first call.
    """
    if not math.isfinite(y):
        raise SodError(f"non-finite sample {y!r} on channel {gate.channel}")
    if gate.last_sent is not None and t < gate.last_sent_time:
        raise SodError(f"time went backwards: {t} < {gate.last_sent_time}")
    if gate.last_sent is not None and abs(y - gate.last_sent) <= gate.delta:
        return None, gate
    msg = EventMessage(gate.sender, gate.channel, float(y), float(t))
    return msg, replace(gate, last_sent=float(y), last_sent_time=float(t))


def held_value_bounds(gate):
    """Interval guaranteed to contain the true value between transmissions."""
    if gate.last_sent is None:
        raise SodError("gate has not transmitted yet")
    return gate.last_sent - gate.delta, gate.last_sent + gate.delta
