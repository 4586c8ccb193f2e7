"""Command line front end.

    etkfsim run --scenario paper-5agent --out trace.csv
    etkfsim inspect --scenario file:my.json
    etkfsim metrics --trace trace.csv --band 0.5

Exit status: 0 ok, 2 usage, 3 validation, 4 runtime/numerical, 5 I/O.
"""
import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from .graph import GraphError
from .scenario import (BUILTIN_SCENARIOS, ConfigError, ScenarioConfig, ScenarioError,
                       run_scenario)
from .telemetry import TelemetryError, publish_estimates
from .trace import TraceError, TraceLog, compute_metrics

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4, 5
DEFAULT_BAND = 0.5

# CLI flag -> ScenarioConfig field
OVERRIDES = {"delay_ms": "delay_ms", "delta": "delta_voltage", "period": "period_s",
             "duration": "duration_s", "seed": "seed"}


class UsageError(Exception):
    pass


@dataclass
class RunRequest:
    command: str
    scenario: Optional[str] = None
    out: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    mqtt_url: Optional[str] = None
    mqtt_topic_prefix: Optional[str] = None
    trace: Optional[str] = None
    band: float = DEFAULT_BAND


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Once(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        if getattr(namespace, self.dest, None) is not None:
            raise UsageError(f"{option_string} given more than once (conflicting sources)")
        setattr(namespace, self.dest, values)


def _scenario_source(text):
    if text in BUILTIN_SCENARIOS or (text.startswith("file:") and len(text) > 5):
        return text
    raise argparse.ArgumentTypeError(
        f"unknown scenario {text!r}; expected one of {sorted(BUILTIN_SCENARIOS)} or file:PATH")


def build_parser():
    p = _Parser(prog="etkfsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a scenario and write its trace")
    run.add_argument("--scenario", required=True, type=_scenario_source, action=_Once)
    run.add_argument("--out", required=True)
    run.add_argument("--delay-ms", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--period", type=float)
    run.add_argument("--duration", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--band", type=float, default=DEFAULT_BAND,
                     help="settling band for the metrics sidecar (volts)")
    run.add_argument("--mqtt-url")
    run.add_argument("--mqtt-topic-prefix")

    ins = sub.add_parser("inspect", help="print the resolved scenario as canonical JSON")
    ins.add_argument("--scenario", required=True, type=_scenario_source, action=_Once)

    met = sub.add_parser("metrics", help="recompute metrics from a trace CSV")
    met.add_argument("--trace", required=True)
    met.add_argument("--band", type=float, required=True)
    return p


def parse_args(argv):
    ns = build_parser().parse_args(argv)
    req = RunRequest(command=ns.command)
    if ns.command in ("run", "inspect"):
        req.scenario = ns.scenario
    if ns.command == "run":
        req.out = ns.out
        req.band = ns.band
        req.overrides = {OVERRIDES[k]: getattr(ns, k) for k in OVERRIDES
                         if getattr(ns, k) is not None}
        if (ns.mqtt_url is None) != (ns.mqtt_topic_prefix is None):
            raise UsageError("--mqtt-url and --mqtt-topic-prefix must be given together")
        req.mqtt_url, req.mqtt_topic_prefix = ns.mqtt_url, ns.mqtt_topic_prefix
    if ns.command == "metrics":
        req.trace, req.band = ns.trace, ns.band
    return req


def resolve_config(req):
    """Load the scenario source and apply overrides; raises ConfigError/OSError."""
    if req.scenario.startswith("file:"):
        with open(req.scenario[5:]) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{req.scenario[5:]}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("scenario file must hold a JSON object")
        cfg = ScenarioConfig.from_dict(data)
    else:
        cfg = BUILTIN_SCENARIOS[req.scenario]()
    if req.overrides:
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), **req.overrides})
    return cfg


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def execute(req, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if req.command == "metrics":
        if not req.band > 0:
            raise ConfigError("--band must be > 0")
        metrics = compute_metrics(TraceLog.read_csv(req.trace), req.band)
        json.dump(metrics, stdout, indent=2, sort_keys=True)
        stdout.write("\n")
        return EXIT_OK

    cfg = resolve_config(req)
    if req.command == "inspect":
        stdout.write(cfg.to_json() + "\n")
        return EXIT_OK

    if not req.band > 0:
        raise ConfigError("--band must be > 0")
    trace = run_scenario(cfg)
    trace.write_csv(req.out)
    metrics = compute_metrics(trace, req.band)
    _write_json(f"{req.out}.metrics.json",
                {"metrics": metrics, "run": dict(trace.metadata, scenario=req.scenario)})
    if req.mqtt_url:
        try:
            sent = publish_estimates(trace, cfg.ticks_per_period, req.mqtt_url,
                                     req.mqtt_topic_prefix)
            stderr.write(f"telemetry: published {sent} payloads\n")
        except TelemetryError as exc:
            stderr.write(f"telemetry: {exc} (simulation output unaffected)\n")
    return EXIT_OK


def main(argv=None):
    try:
        req = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return execute(req)
    except (ConfigError, GraphError, TraceError) as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_VALIDATION
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (ScenarioError, ArithmeticError) as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
