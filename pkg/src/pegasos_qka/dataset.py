"""Generative labeled datasets that are separable in feature space.

Points are drawn uniformly from [0, 2pi)^{2n} and labeled by thresholding the
Pauli-Z expectation of a designated qubit in the encoded state at a hidden
structure parameter theta_opt; draws inside the margin band are rejected.
Because the labeling functional is linear in the density matrix of the encoded
state, accepted points are linearly separable in feature space at theta_opt by
construction, and progressively harder to separate as the evaluation
parameters move away from it.

For non-stationary runs the structure parameter follows a sine schedule in the
iteration count and every draw is labeled at the current value.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from math import pi, sin
from typing import Sequence

import numpy as np

from .feature_map import Edge, TrainableFeatureMap, covariant_map, format_edges, parse_edges
from .statevector import z_expectation
from .feature_map import prepare_feature_state

LabeledPoint = tuple[np.ndarray, int]


class InfeasibleDatasetError(RuntimeError):
    """Rejection sampling accepted fewer than 1% of draws."""


@dataclass(frozen=True)
class CovariantDatasetSpec:
    """Generative description: map geometry, structure parameter, labeling rule."""

    num_qubits: int
    edges: tuple[Edge, ...]
    theta_opt: float
    label_qubit: int = 0
    threshold: float = 0.0
    margin: float = 0.2
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if not abs(self.threshold) < 1:
            raise ValueError(f"threshold must satisfy |b| < 1, got {self.threshold}")
        if not 0 <= self.label_qubit < self.num_qubits:
            raise ValueError(f"label_qubit {self.label_qubit} out of range")


@dataclass(frozen=True)
class DriftSchedule:
    """Structure parameter amplitude * sin(2 pi t / period)."""

    period: int
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")


@lru_cache(maxsize=32)
def _spec_map(num_qubits: int, edges: tuple[Edge, ...]) -> TrainableFeatureMap:
    return covariant_map(num_qubits, edges)


def margin_functional(
    spec: CovariantDatasetSpec, x: Sequence[float], theta_opt: float | None = None
) -> float:
    """d(x) = <Z on the labeling qubit> - threshold, at the structure parameter."""
    theta = spec.theta_opt if theta_opt is None else theta_opt
    fmap = _spec_map(spec.num_qubits, spec.edges)
    state = prepare_feature_state(fmap, x, [theta])
    return z_expectation(state, spec.label_qubit) - spec.threshold


def _draw_accepted(
    spec: CovariantDatasetSpec, rng: np.random.Generator, max_trials: int
) -> tuple[np.ndarray, int, int]:
    """Rejection-sample one point; returns (x, label, trials used)."""
    dim = 2 * spec.num_qubits
    for trial in range(1, max_trials + 1):
        x = rng.uniform(0.0, 2.0 * pi, size=dim)
        d = margin_functional(spec, x)
        if abs(d) >= spec.margin:
            return x, (1 if d >= 0 else -1), trial
    raise InfeasibleDatasetError(
        f"no sample accepted in {max_trials} trials (margin {spec.margin}, "
        f"threshold {spec.threshold})"
    )


def sample_point(spec: CovariantDatasetSpec, rng: np.random.Generator) -> LabeledPoint:
    """One accepted labeled point."""
    x, label, _ = _draw_accepted(spec, rng, max_trials=10_000)
    return x, label


def generate_dataset(
    spec: CovariantDatasetSpec, size: int, rng: np.random.Generator
) -> list[LabeledPoint]:
    """`size` accepted points; raises if the acceptance rate falls below 1%."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    points: list[LabeledPoint] = []
    trials = 0
    while len(points) < size:
        x, label, used = _draw_accepted(spec, rng, max_trials=10_000)
        trials += used
        points.append((x, label))
        if trials >= 10_000 and len(points) / trials < 0.01:
            raise InfeasibleDatasetError(
                f"acceptance rate {len(points) / trials:.4f} below 1% after {trials} trials"
            )
    return points


def class_balance(points: Sequence[LabeledPoint]) -> float:
    """Fraction of +1 labels."""
    if len(points) == 0:
        raise ValueError("points must be nonempty")
    return sum(1 for _, label in points if label == 1) / len(points)


def calibrate_threshold(
    spec: CovariantDatasetSpec, rng: np.random.Generator, probes: int = 1000
) -> float:
    """Empirical median of the labeling expectation over probe draws.

    Using the median as the threshold balances the two classes; the spec's
    own threshold is ignored during probing.
    """
    dim = 2 * spec.num_qubits
    base = replace(spec, threshold=0.0)
    values = [
        margin_functional(base, rng.uniform(0.0, 2.0 * pi, size=dim))
        for _ in range(probes)
    ]
    return float(np.median(values))


def drift_theta(t: int, schedule: DriftSchedule) -> float:
    """Structure parameter at iteration t."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return schedule.amplitude * sin(2.0 * pi * t / schedule.period)


def stream_sample(
    spec: CovariantDatasetSpec,
    t: int,
    schedule: DriftSchedule,
    rng: np.random.Generator,
) -> LabeledPoint:
    """One point labeled at the drifted structure parameter for iteration t."""
    return sample_point(replace(spec, theta_opt=drift_theta(t, schedule)), rng)


class FixedDataset:
    """Uniform-with-replacement sampler over a materialized labeled set."""

    def __init__(self, points: Sequence[LabeledPoint], theta_opt: float | None = None):
        if len(points) == 0:
            raise ValueError("dataset must be nonempty")
        self.points = list(points)
        self.theta_opt = theta_opt

    def draw(
        self, step: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, int, int, float | None]:
        index = int(rng.integers(len(self.points)))
        x, label = self.points[index]
        return x, label, index, self.theta_opt


class DriftStream:
    """Fresh draw per step, labeled at the schedule's current parameter."""

    def __init__(self, spec: CovariantDatasetSpec, schedule: DriftSchedule):
        self.spec = spec
        self.schedule = schedule

    def draw(
        self, step: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, int, int, float | None]:
        theta = drift_theta(step, self.schedule)
        x, label = sample_point(replace(self.spec, theta_opt=theta), rng)
        return x, label, -1, theta


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_dataset(points: Sequence[LabeledPoint], spec: CovariantDatasetSpec, path: str) -> None:
    """Write points as CSV with one metadata comment line."""
    dim = 2 * spec.num_qubits
    meta = (
        f"# covariant-dataset n={spec.num_qubits} edges={format_edges(spec.edges)} "
        f"theta_opt={_fmt(spec.theta_opt)} threshold={_fmt(spec.threshold)} "
        f"margin={_fmt(spec.margin)} seed={spec.seed if spec.seed is not None else 'none'}"
    )
    header = ",".join(f"x_{k + 1}" for k in range(dim)) + ",y"
    lines = [meta, header]
    for x, label in points:
        lines.append(",".join(_fmt(v) for v in x) + f",{label}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(path: str) -> tuple[list[LabeledPoint], CovariantDatasetSpec]:
    """Read a dataset CSV written by `save_dataset`."""
    points: list[LabeledPoint] = []
    meta: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line.lstrip("# ").split():
                    key, _, value = token.partition("=")
                    if value:
                        meta[key] = value
                continue
            if line.startswith("x_1,"):
                continue
            parts = line.split(",")
            points.append((np.array([float(v) for v in parts[:-1]]), int(parts[-1])))
    seed_text = meta.get("seed", "none")
    spec = CovariantDatasetSpec(
        num_qubits=int(meta["n"]),
        edges=parse_edges(meta.get("edges", "none")),
        theta_opt=float(meta["theta_opt"]),
        threshold=float(meta["threshold"]),
        margin=float(meta["margin"]),
        seed=None if seed_text == "none" else int(seed_text),
    )
    return points, spec
