"""Experiment recipes behind the CLI: dataset generation, training runs,
evaluation, and the stationary / drift / baseline-comparison experiments.

Every run is a pure function of (config, seed): the seed is split into
independent streams for data generation, the training loop, held-out
evaluation draws, and shot noise, and all emitted floats are formatted at 17
significant digits, so reruns produce byte-identical CSV output.
"""
from __future__ import annotations

import json
import os
from dataclasses import replace
from math import pi
from typing import Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, config_as_dict, resolve_threshold_mode
from .dataset import (
    CovariantDatasetSpec,
    DriftSchedule,
    DriftStream,
    FixedDataset,
    calibrate_threshold,
    class_balance,
    drift_theta,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .dual import dual_train_accuracy, nested_qka
from .feature_map import chain_edges, covariant_map, kernel_matrix, parse_edges
from .solver import AlignedModel, RunTrace, accuracy, load_checkpoint, save_checkpoint, train
from .spsa import SpsaConfig

TRACE_COLUMNS = "t,theta_opt,{theta_cols},alpha_t,margin,single_shot_correct,rolling_acc_50,test_acc,primal_obj"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _opt(value: float | None) -> str:
    return "" if value is None else _fmt(value)


def wrap_angle(value: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = (value + pi) % (2.0 * pi) - pi
    return wrapped + 2.0 * pi if wrapped <= -pi else wrapped


def wrap_positive(value: float) -> float:
    """Wrap to [0, 2pi)."""
    return value % (2.0 * pi)


def write_trace_csv(trace: RunTrace, path: str, param_dim: int) -> None:
    theta_cols = ",".join(f"theta_{k + 1}" for k in range(param_dim))
    lines = [TRACE_COLUMNS.format(theta_cols=theta_cols)]
    for i in range(len(trace)):
        row = [
            str(trace.steps[i]),
            _opt(trace.theta_opt[i]),
            ",".join(_fmt(v) for v in trace.theta[i]),
            str(trace.alpha[i]),
            _fmt(trace.margin[i]),
            str(trace.correct[i]),
            _fmt(trace.rolling_acc[i]),
            _opt(trace.test_acc[i]),
            _opt(trace.primal_obj[i]),
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def config_edges(config: ExperimentConfig):
    if config.edges == "chain":
        return chain_edges(config.qubits)
    return parse_edges(config.edges)


def build_spec(
    config: ExperimentConfig, rng: np.random.Generator, theta_opt: float
) -> CovariantDatasetSpec:
    """Dataset spec from config; calibrates the threshold when set to median."""
    spec = CovariantDatasetSpec(
        num_qubits=config.qubits,
        edges=config_edges(config),
        theta_opt=theta_opt,
        threshold=0.0,
        margin=config.data_margin,
        seed=config.seed,
    )
    fixed = resolve_threshold_mode(config)
    threshold = calibrate_threshold(spec, rng) if fixed is None else fixed
    return replace(spec, threshold=threshold)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    root = np.random.SeedSequence(seed)
    names = ("data", "train", "eval", "kernel")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, root.spawn(len(names)))}


def _build_model(config: ExperimentConfig, kernel_rng: np.random.Generator) -> AlignedModel:
    return AlignedModel(
        covariant_map(config.qubits, config_edges(config)),
        lam=config.lam,
        theta0=None,
        window=None if config.window == 0 else config.window,
        tau_in=config.tau_in,
        shots=config.shots,
        spsa=SpsaConfig(mu=config.spsa_mu, c=config.spsa_c, decay=config.spsa_decay),
        kernel_rng=kernel_rng,
    )


def _out_path(config: ExperimentConfig, name: str) -> str:
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def _write_summary(config: ExperimentConfig, summary: dict, name: str = "summary.json") -> None:
    with open(_out_path(config, name), "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def _kernel_counts(model: AlignedModel) -> dict[str, int]:
    return {
        "kernel_evals_exact": model.kernel.exact_evals,
        "kernel_evals_sampled": model.kernel.sampled_evals,
    }


def run_stationary(config: ExperimentConfig) -> dict:
    """Train with alignment on a fixed dataset; periodic held-out evaluation."""
    rngs = _streams(config.seed)
    spec = build_spec(config, rngs["data"], theta_opt=config.data_theta_opt)
    train_points = generate_dataset(spec, config.data_size, rngs["data"])
    test_points = generate_dataset(spec, config.data_test_size, rngs["data"])
    model = _build_model(config, rngs["kernel"])

    def eval_fn(current: AlignedModel, step: int) -> float:
        return accuracy(current, test_points)

    trace = train(
        model,
        FixedDataset(train_points, theta_opt=spec.theta_opt),
        config.steps,
        rngs["train"],
        eval_every=config.trace_eval_every,
        eval_fn=eval_fn,
        objective_every=config.trace_objective_every,
        objective_dataset=train_points if config.trace_objective_every else None,
    )
    save_dataset(train_points, spec, _out_path(config, "dataset.csv"))
    write_trace_csv(trace, _out_path(config, "trace.csv"), model.fmap.param_dim)
    save_checkpoint(model, _out_path(config, "checkpoint.txt"))
    evaluated = [v for v in trace.test_acc if v is not None]
    summary = {
        "experiment": "stationary",
        "seed": config.seed,
        "steps": config.steps,
        "train_size": len(train_points),
        "class_balance": class_balance(train_points),
        "final_theta": [float(v) for v in model.theta],
        "final_theta_wrapped": [wrap_positive(float(v)) for v in model.theta],
        "final_rolling_acc": trace.rolling_acc[-1],
        "final_test_acc": evaluated[-1] if evaluated else None,
        "support_records": len(model.records),
        **_kernel_counts(model),
        "config": config_as_dict(config),
    }
    _write_summary(config, summary)
    return summary


def run_drift(config: ExperimentConfig) -> dict:
    """Train on a drifting stream with a finite window; track the parameter."""
    rngs = _streams(config.seed)
    schedule = DriftSchedule(config.drift_period, config.drift_amplitude)
    spec = build_spec(config, rngs["data"], theta_opt=drift_theta(0, schedule))
    model = _build_model(config, rngs["kernel"])

    def eval_fn(current: AlignedModel, step: int) -> float:
        theta_now = drift_theta(step, schedule)
        points = generate_dataset(
            replace(spec, theta_opt=theta_now), config.data_test_size, rngs["eval"]
        )
        return accuracy(current, points)

    trace = train(
        model,
        DriftStream(spec, schedule),
        config.steps,
        rngs["train"],
        eval_every=config.trace_eval_every,
        eval_fn=eval_fn,
    )
    write_trace_csv(trace, _out_path(config, "trace.csv"), model.fmap.param_dim)
    save_checkpoint(model, _out_path(config, "checkpoint.txt"))
    burn_in = config.drift_period // 4
    post = [i for i in range(len(trace)) if trace.steps[i] > burn_in]
    if not post:
        raise ConfigError(
            f"steps ({config.steps}) must exceed the burn-in (period/4 = {burn_in})"
        )
    tracking_errors = [
        abs(wrap_angle(float(trace.theta[i][0]) - trace.theta_opt[i])) for i in post
    ]
    summary = {
        "experiment": "drift",
        "seed": config.seed,
        "steps": config.steps,
        "window": config.window,
        "drift_period": config.drift_period,
        "burn_in": burn_in,
        "post_burn_in_rolling_acc_mean": float(np.mean([trace.rolling_acc[i] for i in post])),
        "tracking_error_mean": float(np.mean(tracking_errors)),
        "final_theta": [float(v) for v in model.theta],
        "support_records": len(model.records),
        **_kernel_counts(model),
        "config": config_as_dict(config),
    }
    _write_summary(config, summary)
    return summary


def run_comparison(config: ExperimentConfig) -> dict:
    """Aligned subgradient training vs the nested dual scheme, same data and seed."""
    rngs = _streams(config.seed)
    spec = build_spec(config, rngs["data"], theta_opt=config.data_theta_opt)
    points = generate_dataset(spec, config.data_size, rngs["data"])
    labels = [label for _, label in points]

    model = _build_model(config, rngs["kernel"])
    trace = train(model, FixedDataset(points, spec.theta_opt), config.steps, rngs["train"])
    pegasos_cost = _kernel_counts(model)
    pegasos_train_acc = accuracy(model, points)

    nested = nested_qka(
        model.fmap,
        points,
        config.lam,
        SpsaConfig(mu=config.spsa_mu, c=config.spsa_c, decay=config.spsa_decay),
        config.nested_outer_iters,
        rngs["eval"],
    )
    gram = kernel_matrix(model.fmap, [x for x, _ in points], nested.theta)
    nested_acc = dual_train_accuracy(nested.solution, labels, gram, config.lam)

    write_trace_csv(trace, _out_path(config, "trace.csv"), model.fmap.param_dim)
    summary = {
        "experiment": "dual-baseline",
        "seed": config.seed,
        "train_size": len(points),
        "pegasos": {
            "final_theta_wrapped": [wrap_positive(float(v)) for v in model.theta],
            "train_accuracy": pegasos_train_acc,
            "final_rolling_acc": trace.rolling_acc[-1],
            **pegasos_cost,
        },
        "nested": {
            "final_theta_wrapped": [wrap_positive(float(v)) for v in nested.theta],
            "train_accuracy": nested_acc,
            "dual_objective": nested.solution.objective,
            "kernel_entries": nested.kernel_entries,
            "outer_iters": config.nested_outer_iters,
        },
        "config": config_as_dict(config),
    }
    _write_summary(config, summary, name="comparison.json")
    return summary


def run_generate(config: ExperimentConfig) -> dict:
    """Generate a dataset and write it to CSV."""
    rngs = _streams(config.seed)
    spec = build_spec(config, rngs["data"], theta_opt=config.data_theta_opt)
    points = generate_dataset(spec, config.data_size, rngs["data"])
    path = config.data_file or _out_path(config, "dataset.csv")
    save_dataset(points, spec, path)
    return {
        "dataset": path,
        "size": len(points),
        "class_balance": class_balance(points),
        "threshold": spec.threshold,
    }


def run_train(config: ExperimentConfig) -> dict:
    """Train on a dataset file (generated fresh when none is configured)."""
    rngs = _streams(config.seed)
    if config.data_file:
        points, spec = load_dataset(config.data_file)
        if spec.num_qubits != config.qubits:
            raise ConfigError(
                f"dataset has {spec.num_qubits} qubits but config says {config.qubits}"
            )
    else:
        spec = build_spec(config, rngs["data"], theta_opt=config.data_theta_opt)
        points = generate_dataset(spec, config.data_size, rngs["data"])
        save_dataset(points, spec, _out_path(config, "dataset.csv"))
    model = AlignedModel(
        covariant_map(spec.num_qubits, spec.edges),
        lam=config.lam,
        window=None if config.window == 0 else config.window,
        tau_in=config.tau_in,
        shots=config.shots,
        spsa=SpsaConfig(mu=config.spsa_mu, c=config.spsa_c, decay=config.spsa_decay),
        kernel_rng=rngs["kernel"],
    )
    trace = train(
        model, FixedDataset(points, spec.theta_opt), config.steps, rngs["train"]
    )
    checkpoint = config.model_file or _out_path(config, "checkpoint.txt")
    save_checkpoint(model, checkpoint)
    write_trace_csv(trace, _out_path(config, "trace.csv"), model.fmap.param_dim)
    return {
        "checkpoint": checkpoint,
        "steps": config.steps,
        "train_accuracy": accuracy(model, points),
        "final_rolling_acc": trace.rolling_acc[-1],
        "support_records": len(model.records),
        **_kernel_counts(model),
    }


def run_evaluate(config: ExperimentConfig) -> dict:
    """Classify a dataset file with a checkpointed model."""
    checkpoint = config.model_file or _out_path(config, "checkpoint.txt")
    data_path = config.data_file or _out_path(config, "dataset.csv")
    rngs = _streams(config.seed)
    model = load_checkpoint(checkpoint, shots=config.shots, kernel_rng=rngs["kernel"])
    points, _ = load_dataset(data_path)
    return {
        "checkpoint": checkpoint,
        "dataset": data_path,
        "size": len(points),
        "accuracy": accuracy(model, points),
        **_kernel_counts(model),
    }
