"""Stochastic subgradient SVM training with simultaneous kernel alignment.

The model keeps the weight vector implicitly, as the history of margin-violating
samples: w after step tau is (1/(lambda N)) sum_s y_s psi_{theta_s}(x_s) over
the retained records, where theta_s are the feature-map parameters at the time
each record was selected. Every step draws one sample, tests the margin, and on
a violation appends the sample as a support record and (after the warm-up
period) takes one SPSA minimization step on the sample's alignment loss. A
finite window turns the same loop into an online learner that forgets records
older than W iterations.

Normalization: N equals the current step count, or min(step, W) in windowed
mode so the effective learning rate does not decay away while tracking
drifting data.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .feature_map import (
    KernelEvaluator,
    TrainableFeatureMap,
    covariant_map,
    format_edges,
    parse_edges,
    prepare_feature_state,
)
from .spsa import SpsaConfig, spsa_step


@dataclass
class SupportRecord:
    """One margin-violating sample: its features, label, and the parameters
    in force when it was selected."""

    step: int
    index: int
    x: np.ndarray
    label: int
    theta: np.ndarray
    alpha: int = 1


@dataclass
class StepReport:
    step: int
    alpha: int
    margin: float
    theta_updated: bool


@dataclass
class RunTrace:
    """Per-iteration training metrics, one row per step."""

    steps: list[int] = field(default_factory=list)
    theta_opt: list[float | None] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list)
    alpha: list[int] = field(default_factory=list)
    margin: list[float] = field(default_factory=list)
    correct: list[int] = field(default_factory=list)
    rolling_acc: list[float] = field(default_factory=list)
    test_acc: list[float | None] = field(default_factory=list)
    primal_obj: list[float | None] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def add(
        self,
        *,
        step: int,
        theta_opt: float | None,
        theta: np.ndarray,
        alpha: int,
        margin: float,
        correct: int,
        rolling_acc: float,
        test_acc: float | None = None,
        primal_obj: float | None = None,
    ) -> None:
        self.steps.append(step)
        self.theta_opt.append(theta_opt)
        self.theta.append(theta)
        self.alpha.append(alpha)
        self.margin.append(margin)
        self.correct.append(correct)
        self.rolling_acc.append(rolling_acc)
        self.test_acc.append(test_acc)
        self.primal_obj.append(primal_obj)


class SampleSource(Protocol):
    """Per-step sample supplier: returns (x, label, index, theta_opt or None)."""

    def draw(
        self, step: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, int, int, float | None]:
        ...


class AlignedModel:
    """Kernel SVM state trained by `pegasos_step`, with trainable map parameters.

    `window` of None keeps the whole history; an integer W retains only records
    from the last W iterations. `tau_in` is the number of warm-up steps during
    which parameters are frozen. `shots` of 0 evaluates kernels exactly,
    otherwise every kernel entry is a shot-based estimate drawn from
    `kernel_rng`.
    """

    def __init__(
        self,
        fmap: TrainableFeatureMap,
        lam: float = 1.0,
        theta0: Sequence[float] | None = None,
        window: int | None = None,
        tau_in: int = 50,
        shots: int = 0,
        spsa: SpsaConfig | None = None,
        kernel_rng: np.random.Generator | None = None,
    ) -> None:
        if lam <= 0:
            raise ValueError(f"lam must be > 0, got {lam}")
        if window is not None and window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if tau_in < 0:
            raise ValueError(f"tau_in must be >= 0, got {tau_in}")
        self.fmap = fmap
        self.lam = lam
        self.theta = (
            np.zeros(fmap.param_dim) if theta0 is None else np.asarray(theta0, dtype=np.float64).copy()
        )
        if self.theta.shape != (fmap.param_dim,):
            raise ValueError(f"theta0 must have {fmap.param_dim} components")
        self.window = window
        self.tau_in = tau_in
        self.spsa = spsa if spsa is not None else SpsaConfig()
        self.kernel = KernelEvaluator(fmap, shots=shots, rng=kernel_rng)
        self.records: list[SupportRecord] = []
        self.current_step = 0
        self._states: list[np.ndarray] = []  # cached psi_{theta_s}(x_s) per record

    @property
    def shots(self) -> int:
        return self.kernel.shots

    def append_record(self, record: SupportRecord) -> None:
        """Append a support record and cache its feature state."""
        if self.records and record.step <= self.records[-1].step:
            raise ValueError("records must be appended in strictly increasing step order")
        self.records.append(record)
        self._states.append(
            prepare_feature_state(self.fmap, record.x, record.theta).amplitudes
        )

    def _effective_steps(self, step: int) -> int:
        return step if self.window is None else min(step, self.window)

    def _raw_sum(self, x: Sequence[float], theta_eval: Sequence[float]) -> float:
        """sum_s y_s k(x_s, theta_s; x, theta_eval) over retained records."""
        if not self.records:
            return 0.0
        psi = prepare_feature_state(self.fmap, x, theta_eval).amplitudes
        kernels = self.kernel.against_states(np.stack(self._states), psi)
        labels = np.fromiter((r.label for r in self.records), dtype=np.float64)
        return float(labels @ kernels)

    def decision_value(
        self, x: Sequence[float], theta_eval: Sequence[float] | None = None
    ) -> float:
        """(1/(lambda N)) sum_s y_s k(x_s, theta_s; x, theta_eval)."""
        if not self.records:
            return 0.0
        n = self._effective_steps(self.current_step)
        if n == 0:
            return 0.0
        theta_eval = self.theta if theta_eval is None else theta_eval
        return self._raw_sum(x, theta_eval) / (self.lam * n)

    def classify(self, x: Sequence[float]) -> int:
        """Sign of the decision value at the current parameters; 0 maps to +1."""
        return 1 if self.decision_value(x) >= 0.0 else -1

    def pegasos_step(
        self,
        sample: tuple[Sequence[float], int, int],
        rng: np.random.Generator,
    ) -> StepReport:
        """Process one sample: margin test, record append, optional SPSA step."""
        x, label, index = sample
        x = np.asarray(x, dtype=np.float64)
        t = self.current_step + 1
        n = self._effective_steps(t)
        margin = label * self._raw_sum(x, self.theta) / (self.lam * n)
        alpha = 0
        updated = False
        if t == 1:
            alpha = 1
            self.append_record(SupportRecord(t, index, x.copy(), label, self.theta.copy()))
        elif margin < 1.0:
            alpha = 1
            record = SupportRecord(t, index, x.copy(), label, self.theta.copy())
            if t > self.tau_in:
                # loss of the sampled point as a function of the map parameters,
                # over the records present before this step
                def loss(theta: np.ndarray) -> float:
                    return -label * self._raw_sum(x, theta) / (self.lam * n)

                self.theta = spsa_step(loss, self.theta, self.spsa, rng)
                updated = True
            self.append_record(record)
        self.current_step = t
        if self.window is not None:
            self._evict(t)
        return StepReport(t, alpha, margin, updated)

    def _evict(self, step: int) -> None:
        cutoff = step - self.window
        keep = 0
        while keep < len(self.records) and self.records[keep].step <= cutoff:
            keep += 1
        if keep:
            del self.records[:keep]
            del self._states[:keep]

    def truncate_window(self, window: int) -> "AlignedModel":
        """Switch to windowed mode, dropping records older than `window` steps."""
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._evict(self.current_step)
        return self

    def primal_objective(self, dataset: Sequence[tuple[np.ndarray, int]]) -> float:
        """Regularizer plus hinge losses of `dataset` at the current parameters."""
        if len(dataset) == 0:
            raise ValueError("dataset must be nonempty")
        n = self._effective_steps(self.current_step)
        w_norm2 = 0.0
        if self.records and n > 0:
            gram = self.kernel.gram_from_states(np.stack(self._states))
            labels = np.fromiter((r.label for r in self.records), dtype=np.float64)
            w_norm2 = float(labels @ gram @ labels) / (self.lam * n) ** 2
        hinge = 0.0
        for x, label in dataset:
            hinge += max(0.0, 1.0 - label * self.decision_value(x))
        return self.lam / 2.0 * w_norm2 + hinge


def accuracy(model: AlignedModel, points: Sequence[tuple[np.ndarray, int]]) -> float:
    """Fraction of points whose predicted sign matches the label."""
    if len(points) == 0:
        raise ValueError("points must be nonempty")
    hits = sum(1 for x, label in points if model.classify(x) == label)
    return hits / len(points)


def train(
    model: AlignedModel,
    source: SampleSource,
    steps: int,
    rng: np.random.Generator,
    *,
    eval_every: int = 0,
    eval_fn: Callable[[AlignedModel, int], float] | None = None,
    objective_every: int = 0,
    objective_dataset: Sequence[tuple[np.ndarray, int]] | None = None,
) -> RunTrace:
    """Run `steps` training iterations, recording one trace row per step.

    Single-shot correctness is measured before the update, on the sample the
    step is about to consume. `eval_fn(model, t)` supplies the test accuracy
    every `eval_every` steps when given.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    trace = RunTrace()
    last50: deque[int] = deque(maxlen=50)
    for t in range(1, steps + 1):
        x, label, index, theta_opt = source.draw(t, rng)
        correct = 1 if model.classify(x) == label else 0
        report = model.pegasos_step((x, label, index), rng)
        last50.append(correct)
        test_acc = None
        if eval_fn is not None and eval_every > 0 and t % eval_every == 0:
            test_acc = eval_fn(model, t)
        primal = None
        if objective_dataset is not None and objective_every > 0 and t % objective_every == 0:
            primal = model.primal_objective(objective_dataset)
        trace.add(
            step=t,
            theta_opt=theta_opt,
            theta=model.theta.copy(),
            alpha=report.alpha,
            margin=report.margin,
            correct=correct,
            rolling_acc=sum(last50) / len(last50),
            test_acc=test_acc,
            primal_obj=primal,
        )
    return trace


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_checkpoint(model: AlignedModel, path: str) -> None:
    """Write the model to a plain-text checkpoint (17 significant digits)."""
    fmap = model.fmap
    lines = [
        f"lam = {_fmt(model.lam)}",
        f"window = {0 if model.window is None else model.window}",
        f"tau_in = {model.tau_in}",
        f"step = {model.current_step}",
        f"theta = {' '.join(_fmt(v) for v in model.theta)}",
        f"map = covariant:{fmap.num_qubits}:{format_edges(fmap.entangling_edges)}",
    ]
    for rec in model.records:
        parts = [str(rec.step), str(rec.label)]
        parts += [_fmt(v) for v in rec.theta]
        parts += [_fmt(v) for v in rec.x]
        lines.append("record " + " ".join(parts))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_checkpoint(
    path: str,
    fmap: TrainableFeatureMap | None = None,
    shots: int = 0,
    kernel_rng: np.random.Generator | None = None,
    spsa: SpsaConfig | None = None,
) -> AlignedModel:
    """Rebuild a model from `save_checkpoint` output.

    The map is reconstructed from the checkpoint's covariant reference unless
    an explicit `fmap` is given. Record data indices are not persisted and
    reload as -1.
    """
    header: dict[str, str] = {}
    record_lines: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("record "):
                record_lines.append(line[len("record "):])
            else:
                key, _, value = line.partition("=")
                header[key.strip()] = value.strip()
    if fmap is None:
        kind, _, rest = header["map"].partition(":")
        if kind != "covariant":
            raise ValueError(f"cannot rebuild feature map of kind {kind!r}; pass fmap=")
        qubits_text, _, edges_text = rest.partition(":")
        fmap = covariant_map(int(qubits_text), parse_edges(edges_text))
    window = int(header["window"])
    model = AlignedModel(
        fmap,
        lam=float(header["lam"]),
        theta0=[float(v) for v in header["theta"].split()],
        window=None if window == 0 else window,
        tau_in=int(header["tau_in"]),
        shots=shots,
        spsa=spsa,
        kernel_rng=kernel_rng,
    )
    d = fmap.param_dim
    for line in record_lines:
        parts = line.split()
        step, label = int(parts[0]), int(parts[1])
        theta = np.array([float(v) for v in parts[2 : 2 + d]])
        x = np.array([float(v) for v in parts[2 + d :]])
        model.append_record(SupportRecord(step, -1, x, label, theta))
    model.current_step = int(header["step"])
    return model
