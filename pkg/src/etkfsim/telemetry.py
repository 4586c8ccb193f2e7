"""Optional MQTT export of per-agent estimates (one payload per agent per period)."""
import json
import logging
from urllib.parse import urlparse

log = logging.getLogger(__name__)


class TelemetryError(RuntimeError):
    pass


def topic_for(prefix, agent):
    return f"{prefix.rstrip('/')}/agent/{agent}/estimate"


def estimate_payloads(trace, ticks_per_period):
    """Yield ``(agent, payload_dict)`` at every estimation instant, in time order.

    ``events`` is the agent's cumulative transmission count up to that tick.
    """
    cumulative = trace.event.cumsum(axis=0)
    for k in range(0, trace.n_ticks, ticks_per_period):
        ts_ms = int(round(float(trace.t[k]) * 1000))
        for i in range(trace.n_agents):
            yield i, {"ts_ms": ts_ms, "agent": i, "xhat": float(trace.xhat[k, i]),
                      "events": int(cumulative[k, i])}


def parse_broker_url(url):
    parsed = urlparse(url if "://" in url else f"mqtt://{url}")
    if parsed.scheme not in ("mqtt", "tcp") or not parsed.hostname:
        raise TelemetryError(f"unsupported telemetry URL {url!r} (use mqtt://host[:port])")
    return parsed.hostname, parsed.port or 1883


def _paho_client():
    try:
        import paho.mqtt.client as mqtt
    except ImportError as exc:
        raise TelemetryError("paho-mqtt is not installed") from exc
    return mqtt.Client(mqtt.CallbackAPIVersion.VERSION2)


def publish_estimates(trace, ticks_per_period, url, prefix, client_factory=_paho_client,
                      timeout=5.0):
    """Publish every estimate payload at QoS 0.  Returns the number sent."""
    host, port = parse_broker_url(url)
    client = client_factory()
    try:
        client.connect(host, port, keepalive=int(max(timeout, 5)))
    except OSError as exc:
        raise TelemetryError(f"cannot reach MQTT broker {host}:{port}: {exc}") from exc
    client.loop_start()
    sent = 0
    try:
        for agent, payload in estimate_payloads(trace, ticks_per_period):
            info = client.publish(topic_for(prefix, agent), json.dumps(payload), qos=0)
            if getattr(info, "rc", 0) != 0:
                raise TelemetryError(f"publish failed with rc={info.rc}")
            sent += 1
    finally:
        client.loop_stop()
        client.disconnect()
    log.info("published %d telemetry payloads to %s:%d", sent, host, port)
    return sent
