"""Experiment configuration: flat `section.key = value` files with defaults.

Every key has a default so an empty config runs; unknown keys are errors so a
config file is a faithful record of what an experiment did.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from math import pi


class ConfigError(ValueError):
    """Invalid configuration file or field value."""


@dataclass
class ExperimentConfig:
    experiment: str = "stationary"  # stationary | drift | dual-baseline | nested-qka
    seed: int = 0
    out: str = "."
    qubits: int = 4
    edges: str = "chain"            # chain | none | "0-1,1-2,..."
    lam: float = 1.0
    steps: int = 1500
    tau_in: int = 50
    window: int = 0                 # 0 = unbounded
    shots: int = 0                  # 0 = exact kernels
    spsa_mu: float = 0.1
    spsa_c: float = 0.1
    spsa_decay: bool = False
    data_theta_opt: float = pi / 2
    data_margin: float = 0.2
    data_threshold: str = "median"  # median | a float literal
    data_size: int = 40
    data_test_size: int = 25
    data_file: str = ""
    model_file: str = ""
    drift_period: int = 1000
    drift_amplitude: float = 1.0
    trace_eval_every: int = 50
    trace_objective_every: int = 0
    nested_outer_iters: int = 25


# config-file key -> dataclass field
KEY_TO_FIELD = {
    "experiment": "experiment",
    "seed": "seed",
    "out": "out",
    "qubits": "qubits",
    "edges": "edges",
    "lambda": "lam",
    "steps": "steps",
    "tau_in": "tau_in",
    "window": "window",
    "shots": "shots",
    "spsa.mu": "spsa_mu",
    "spsa.c": "spsa_c",
    "spsa.decay": "spsa_decay",
    "data.theta_opt": "data_theta_opt",
    "data.margin": "data_margin",
    "data.threshold": "data_threshold",
    "data.size": "data_size",
    "data.test_size": "data_test_size",
    "data.file": "data_file",
    "model.file": "model_file",
    "drift.period": "drift_period",
    "drift.amplitude": "drift_amplitude",
    "trace.eval_every": "trace_eval_every",
    "trace.objective_every": "trace_objective_every",
    "nested.outer_iters": "nested_outer_iters",
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}

EXPERIMENT_KINDS = ("stationary", "drift", "dual-baseline", "nested-qka")


def _convert(key: str, field_name: str, text: str):
    kind = _FIELD_TYPES[field_name]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def parse_config(path: str) -> ExperimentConfig:
    """Read a config file; unknown keys and malformed lines are errors."""
    config = ExperimentConfig()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in KEY_TO_FIELD:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            setattr(config, KEY_TO_FIELD[key], _convert(key, KEY_TO_FIELD[key], value))
    return config


def resolve_threshold_mode(config: ExperimentConfig) -> float | None:
    """None means calibrate from probe samples, otherwise the fixed value."""
    if config.data_threshold == "median":
        return None
    try:
        value = float(config.data_threshold)
    except ValueError as exc:
        raise ConfigError(
            f"data.threshold must be 'median' or a float, got {config.data_threshold!r}"
        ) from exc
    if not abs(value) < 1:
        raise ConfigError(f"data.threshold must satisfy |b| < 1, got {value}")
    return value


def validate_config(config: ExperimentConfig) -> None:
    """Check field ranges, naming the offending key in the error."""
    checks = [
        (config.experiment in EXPERIMENT_KINDS, f"experiment must be one of {EXPERIMENT_KINDS}"),
        (config.qubits >= 1, "qubits must be >= 1"),
        (config.lam > 0, "lambda must be > 0"),
        (config.steps >= 1, "steps must be >= 1"),
        (config.tau_in >= 0, "tau_in must be >= 0"),
        (config.window >= 0, "window must be >= 0 (0 = unbounded)"),
        (config.shots >= 0, "shots must be >= 0 (0 = exact)"),
        (config.spsa_mu > 0, "spsa.mu must be > 0"),
        (config.spsa_c > 0, "spsa.c must be > 0"),
        (config.data_margin >= 0, "data.margin must be >= 0"),
        (config.data_size >= 1, "data.size must be >= 1"),
        (config.data_test_size >= 1, "data.test_size must be >= 1"),
        (config.drift_period >= 1, "drift.period must be >= 1"),
        (config.trace_eval_every >= 0, "trace.eval_every must be >= 0"),
        (config.trace_objective_every >= 0, "trace.objective_every must be >= 0"),
        (config.nested_outer_iters >= 0, "nested.outer_iters must be >= 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    resolve_threshold_mode(config)
    if config.experiment == "drift" and config.window < 1:
        raise ConfigError("drift experiments require window >= 1")


def config_as_dict(config: ExperimentConfig) -> dict:
    """Config echo for summaries, keyed by config-file key names."""
    return {key: getattr(config, field) for key, field in KEY_TO_FIELD.items()}
