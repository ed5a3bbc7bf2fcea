"""Trainable feature maps and fidelity kernels.

A feature map is an ordered list of layers, each either a data-upload layer
(rotation angles read from the data vector x) or a trainable layer (angles
read from the parameter vector theta, plus entangling CNOTs). Kernel values
are fidelities |<psi_a(x)|psi_b(y)>|^2 between the encoded states; when the
two sides use different parameter vectors this is the pseudo-kernel that the
aligning solver relies on.

The concrete map used throughout the experiments encodes 2n data angles on n
qubits: a trainable layer of shared-angle RY rotations followed by CNOTs over
an entangling edge list, then per qubit RZ(x[2k+1]) followed by RX(x[2k]).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .statevector import StateVector, apply_cnot, apply_rotation, inner_product, zero_state

ROTATIONS = ("rx", "ry", "rz")
Edge = tuple[int, int]


@dataclass(frozen=True)
class GateOp:
    """One gate: a rotation reading angle `source`[`index`], or a cnot."""

    gate: str                 # "rx" | "ry" | "rz" | "cnot"
    qubits: tuple[int, ...]   # (qubit,) for rotations, (control, target) for cnot
    source: str = ""          # "data" | "param" for rotations
    index: int = -1


@dataclass(frozen=True)
class Layer:
    kind: str                 # "data" | "trainable"
    ops: tuple[GateOp, ...]


@dataclass(frozen=True)
class TrainableFeatureMap:
    """Layered circuit description mapping (x, theta) to a pure state."""

    num_qubits: int
    data_dim: int
    param_dim: int
    layers: tuple[Layer, ...]
    entangling_edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self) -> None:
        for layer in self.layers:
            if layer.kind not in ("data", "trainable"):
                raise ValueError(f"unknown layer kind {layer.kind!r}")
            for op in layer.ops:
                self._check_op(op)
        for edge in self.entangling_edges:
            _check_edge(edge, self.num_qubits)

    def _check_op(self, op: GateOp) -> None:
        for qubit in op.qubits:
            if not 0 <= qubit < self.num_qubits:
                raise ValueError(f"qubit {qubit} out of range in {op}")
        if op.gate == "cnot":
            if len(op.qubits) != 2 or op.qubits[0] == op.qubits[1]:
                raise ValueError(f"cnot needs two distinct qubits, got {op}")
            return
        if op.gate not in ROTATIONS:
            raise ValueError(f"unknown gate {op.gate!r}")
        if op.source == "data":
            bound = self.data_dim
        elif op.source == "param":
            bound = self.param_dim
        else:
            raise ValueError(f"rotation needs source 'data' or 'param', got {op}")
        if not 0 <= op.index < bound:
            raise ValueError(f"{op.source} index {op.index} out of range in {op}")


def _check_edge(edge: Edge, num_qubits: int) -> None:
    a, b = edge
    if a == b or not (0 <= a < num_qubits and 0 <= b < num_qubits):
        raise ValueError(f"invalid entangling edge {edge} for {num_qubits} qubits")


def chain_edges(num_qubits: int) -> tuple[Edge, ...]:
    """Linear-chain connectivity (0,1), (1,2), ..."""
    return tuple((k, k + 1) for k in range(num_qubits - 1))


def covariant_map(num_qubits: int, edges: Sequence[Edge] | None = None) -> TrainableFeatureMap:
    """Covariant feature map on `num_qubits` qubits.

    Circuit order on |0...0>: shared-angle RY layer, CNOTs in the listed edge
    order, then per qubit RZ(x[2k+1]) followed by RX(x[2k]). Consumes 2n data
    components and a single shared parameter.
    """
    if num_qubits < 1:
        raise ValueError(f"num_qubits must be >= 1, got {num_qubits}")
    edge_list = chain_edges(num_qubits) if edges is None else tuple(tuple(e) for e in edges)
    for edge in edge_list:
        _check_edge(edge, num_qubits)
    trainable = [GateOp("ry", (k,), "param", 0) for k in range(num_qubits)]
    trainable += [GateOp("cnot", edge) for edge in edge_list]
    data = []
    for k in range(num_qubits):
        data.append(GateOp("rz", (k,), "data", 2 * k + 1))
        data.append(GateOp("rx", (k,), "data", 2 * k))
    return TrainableFeatureMap(
        num_qubits=num_qubits,
        data_dim=2 * num_qubits,
        param_dim=1,
        layers=(Layer("trainable", tuple(trainable)), Layer("data", tuple(data))),
        entangling_edges=edge_list,
    )


def _angle(op: GateOp, x: np.ndarray, theta: np.ndarray) -> float:
    return float(x[op.index] if op.source == "data" else theta[op.index])


def _as_vector(values: Sequence[float], dim: int, name: str) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64).reshape(-1)
    if vec.shape[0] != dim:
        raise ValueError(f"{name} must have {dim} components, got {vec.shape[0]}")
    return vec


def prepare_feature_state(
    fmap: TrainableFeatureMap, x: Sequence[float], theta: Sequence[float]
) -> StateVector:
    """Encode (x, theta) into a normalized state by applying all layers in order."""
    xv = _as_vector(x, fmap.data_dim, "x")
    tv = _as_vector(theta, fmap.param_dim, "theta")
    state = zero_state(fmap.num_qubits)
    for layer in fmap.layers:
        for op in layer.ops:
            if op.gate == "cnot":
                state = apply_cnot(state, op.qubits[0], op.qubits[1])
            else:
                state = apply_rotation(state, op.gate[1].upper(), _angle(op, xv, tv), op.qubits[0])
    return state


def _apply_inverse(
    fmap: TrainableFeatureMap, state: StateVector, x: np.ndarray, theta: np.ndarray
) -> StateVector:
    """Apply the inverse of the encoding circuit: reversed gates, negated angles."""
    for layer in reversed(fmap.layers):
        for op in reversed(layer.ops):
            if op.gate == "cnot":
                state = apply_cnot(state, op.qubits[0], op.qubits[1])
            else:
                state = apply_rotation(state, op.gate[1].upper(), -_angle(op, x, theta), op.qubits[0])
    return state


def _clip_unit(value: float) -> float:
    # roundoff only; fidelities are in [0, 1] by construction
    return min(max(value, 0.0), 1.0)


def pseudo_kernel(
    fmap: TrainableFeatureMap,
    x: Sequence[float],
    theta_a: Sequence[float],
    y: Sequence[float],
    theta_b: Sequence[float],
) -> float:
    """Fidelity |<psi_a(x)|psi_b(y)>|^2; the plain kernel is theta_a == theta_b."""
    a = prepare_feature_state(fmap, x, theta_a)
    b = prepare_feature_state(fmap, y, theta_b)
    return _clip_unit(abs(inner_product(a, b)) ** 2)


def composed_zero_probability(
    fmap: TrainableFeatureMap,
    x: Sequence[float],
    theta_a: Sequence[float],
    y: Sequence[float],
    theta_b: Sequence[float],
) -> float:
    """All-zero outcome probability of encode(x, theta_a) followed by encode(y, theta_b) inverted.

    Independent route to the same fidelity as `pseudo_kernel`; this is what a
    shot-based device estimates by counting the all-zero bitstring.
    """
    state = prepare_feature_state(fmap, x, theta_a)
    yv = _as_vector(y, fmap.data_dim, "y")
    tv = _as_vector(theta_b, fmap.param_dim, "theta_b")
    state = _apply_inverse(fmap, state, yv, tv)
    return _clip_unit(abs(state.amplitudes[0]) ** 2)


@dataclass(frozen=True)
class KernelEstimate:
    """Shot-based kernel estimate: all-zero frequency out of `shots` repetitions."""

    value: float
    shots: int
    all_zero_count: int


def kernel_sampled(
    fmap: TrainableFeatureMap,
    x: Sequence[float],
    theta_a: Sequence[float],
    y: Sequence[float],
    theta_b: Sequence[float],
    shots: int,
    rng: np.random.Generator,
) -> KernelEstimate:
    """Estimate the kernel from `shots` measurement repetitions.

    The all-zero probability of the composed circuit equals the fidelity
    exactly, so the count is drawn from Binomial(shots, p) instead of
    enumerating bitstrings.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = pseudo_kernel(fmap, x, theta_a, y, theta_b)
    count = int(rng.binomial(shots, p))
    return KernelEstimate(count / shots, shots, count)


def feature_states(
    fmap: TrainableFeatureMap, xs: Sequence[Sequence[float]], theta: Sequence[float]
) -> np.ndarray:
    """Stack the encoded states of `xs` into an (M, 2**q) array."""
    if len(xs) == 0:
        raise ValueError("xs must be nonempty")
    return np.stack([prepare_feature_state(fmap, x, theta).amplitudes for x in xs])


def kernel_matrix(
    fmap: TrainableFeatureMap, xs: Sequence[Sequence[float]], theta: Sequence[float]
) -> np.ndarray:
    """Gram matrix K_ij = |<psi(x_i)|psi(x_j)>|^2 at one shared theta."""
    states = feature_states(fmap, xs, theta)
    gram = np.abs(states.conj() @ states.T) ** 2
    gram = np.clip((gram + gram.T) / 2.0, 0.0, 1.0)
    return gram


class KernelEvaluator:
    """Kernel evaluation with entry counting and optional shot noise.

    `shots` = 0 evaluates exact fidelities; `shots` > 0 replaces every entry by
    a Binomial(shots, p)/shots estimate drawn from `rng`. Counters track how
    many kernel entries were computed on each path, which is the cost metric
    reported by the experiment harness.
    """

    def __init__(
        self,
        fmap: TrainableFeatureMap,
        shots: int = 0,
        rng: np.random.Generator | None = None,
    ) -> None:
        if shots < 0:
            raise ValueError(f"shots must be >= 0, got {shots}")
        if shots > 0 and rng is None:
            raise ValueError("shot-based evaluation needs an rng")
        self.fmap = fmap
        self.shots = shots
        self.rng = rng
        self.exact_evals = 0
        self.sampled_evals = 0

    def _finish(self, values: np.ndarray) -> np.ndarray:
        if self.shots == 0:
            self.exact_evals += values.size
            return values
        self.sampled_evals += values.size
        return self.rng.binomial(self.shots, values) / self.shots

    def value(
        self,
        x: Sequence[float],
        theta_a: Sequence[float],
        y: Sequence[float],
        theta_b: Sequence[float],
    ) -> float:
        p = pseudo_kernel(self.fmap, x, theta_a, y, theta_b)
        return float(self._finish(np.array([p]))[0])

    def against_states(self, states: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
        """Kernel entries between prepared `states` (rows) and one state's `amplitudes`."""
        values = np.clip(np.abs(states.conj() @ amplitudes) ** 2, 0.0, 1.0)
        return self._finish(values)

    def gram_from_states(self, states: np.ndarray) -> np.ndarray:
        """Gram matrix of prepared states, counted as n(n+1)/2 entries."""
        n = states.shape[0]
        gram = np.abs(states.conj() @ states.T) ** 2
        gram = np.clip((gram + gram.T) / 2.0, 0.0, 1.0)
        if self.shots == 0:
            self.exact_evals += n * (n + 1) // 2
            return gram
        self.sampled_evals += n * (n + 1) // 2
        upper = np.triu_indices(n)
        sampled = np.zeros_like(gram)
        sampled[upper] = self.rng.binomial(self.shots, gram[upper]) / self.shots
        return sampled + np.triu(sampled, 1).T

    def matrix(self, xs: Sequence[Sequence[float]], theta: Sequence[float]) -> np.ndarray:
        return self.gram_from_states(feature_states(self.fmap, xs, theta))


def map_to_text(fmap: TrainableFeatureMap) -> str:
    """Serialize a feature map to the plain-text layer format."""
    lines = [
        f"qubits = {fmap.num_qubits}",
        f"data_dim = {fmap.data_dim}",
        f"param_dim = {fmap.param_dim}",
        f"edges = {format_edges(fmap.entangling_edges)}",
    ]
    for layer in fmap.layers:
        lines.append(f"layer {layer.kind}")
        for op in layer.ops:
            if op.gate == "cnot":
                lines.append(f"  cnot {op.qubits[0]} {op.qubits[1]}")
            else:
                lines.append(f"  {op.gate} {op.qubits[0]} {op.source} {op.index}")
    return "\n".join(lines) + "\n"


def map_from_text(text: str) -> TrainableFeatureMap:
    """Parse the format written by `map_to_text`."""
    header: dict[str, str] = {}
    layers: list[tuple[str, list[GateOp]]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("layer "):
            layers.append((line.split(None, 1)[1], []))
        elif "=" in line and not layers:
            key, value = (part.strip() for part in line.split("=", 1))
            header[key] = value
        else:
            parts = line.split()
            if not layers:
                raise ValueError(f"gate line before any layer: {line!r}")
            if parts[0] == "cnot":
                layers[-1][1].append(GateOp("cnot", (int(parts[1]), int(parts[2]))))
            else:
                layers[-1][1].append(
                    GateOp(parts[0], (int(parts[1]),), parts[2], int(parts[3]))
                )
    try:
        num_qubits = int(header["qubits"])
        data_dim = int(header["data_dim"])
        param_dim = int(header["param_dim"])
        edges = parse_edges(header["edges"])
    except KeyError as exc:
        raise ValueError(f"feature map text missing header field {exc}") from exc
    return TrainableFeatureMap(
        num_qubits=num_qubits,
        data_dim=data_dim,
        param_dim=param_dim,
        layers=tuple(Layer(kind, tuple(ops)) for kind, ops in layers),
        entangling_edges=edges,
    )


def format_edges(edges: Sequence[Edge]) -> str:
    return ",".join(f"{a}-{b}" for a, b in edges) if edges else "none"


def parse_edges(text: str) -> tuple[Edge, ...]:
    text = text.strip()
    if text in ("", "none"):
        return ()
    edges = []
    for part in text.split(","):
        a, _, b = part.strip().partition("-")
        edges.append((int(a), int(b)))
    return tuple(edges)
