"""Reference solvers: dual SVM by projected gradient ascent, and the nested
alignment scheme that re-solves the dual inside an outer parameter search.

The dual objective here carries an extra -lambda/2 ||alpha||^2 term, making it
strictly concave with a unique maximizer, and the only constraint is
alpha_i >= 0. Projected gradient ascent with a fixed 1/L step is then simple,
monotone, and easy to validate against grid oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .feature_map import TrainableFeatureMap, feature_states, kernel_matrix
from .spsa import SpsaConfig


@dataclass
class DualSolution:
    alpha: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: list[float] | None = None


@dataclass
class NestedQkaResult:
    """Best evaluated parameters with their dual solution and the kernel cost."""

    theta: np.ndarray
    solution: DualSolution
    kernel_entries: int


def dual_objective(
    alpha: Sequence[float], gram: np.ndarray, labels: Sequence[float], lam: float
) -> float:
    """sum a_i - 1/2 sum a_i a_j y_i y_j K_ij - lam/2 sum a_i^2."""
    alpha = np.asarray(alpha, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    gram = np.asarray(gram, dtype=np.float64)
    m = alpha.shape[0]
    if gram.shape != (m, m) or labels.shape != (m,):
        raise ValueError(
            f"inconsistent shapes: alpha {alpha.shape}, K {gram.shape}, y {labels.shape}"
        )
    ya = labels * alpha
    return float(alpha.sum() - 0.5 * ya @ gram @ ya - lam / 2.0 * alpha @ alpha)


def solve_dual(
    gram: np.ndarray,
    labels: Sequence[float],
    lam: float,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    alpha0: Sequence[float] | None = None,
    record_objectives: bool = False,
) -> DualSolution:
    """Maximize the dual by projected gradient ascent with step 1/(lam + tr K).

    Stops when the projected-gradient norm drops below `tol`. The trace bounds
    the largest eigenvalue of the PSD quadratic term, so the fixed step is
    safely inside the monotone regime.
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    gram = np.asarray(gram, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    m = gram.shape[0]
    if gram.shape != (m, m) or labels.shape != (m,):
        raise ValueError("K must be square and match the label count")
    if not np.allclose(gram, gram.T, atol=1e-9):
        raise ValueError("K must be symmetric")
    quad = labels[:, None] * gram * labels[None, :]
    step = 1.0 / (lam + float(np.trace(gram)))
    alpha = (
        np.zeros(m)
        if alpha0 is None
        else np.maximum(0.0, np.asarray(alpha0, dtype=np.float64))
    )
    history: list[float] | None = [] if record_objectives else None
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        grad = 1.0 - quad @ alpha - lam * alpha
        projected = np.where(alpha > 0.0, grad, np.maximum(grad, 0.0))
        if float(np.linalg.norm(projected)) < tol:
            converged = True
            iterations -= 1
            break
        alpha = np.maximum(0.0, alpha + step * grad)
        if history is not None:
            history.append(dual_objective(alpha, gram, labels, lam))
    return DualSolution(
        alpha=alpha,
        objective=dual_objective(alpha, gram, labels, lam),
        iterations=iterations,
        converged=converged,
        objective_history=history,
    )


def dual_decision_value(
    alpha: Sequence[float],
    labels: Sequence[float],
    fmap: TrainableFeatureMap,
    x_train: Sequence[Sequence[float]],
    theta: Sequence[float],
    x: Sequence[float],
    lam: float,
) -> float:
    """sum_i alpha_i y_i k_theta(x_i, x) / lam."""
    alpha = np.asarray(alpha, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    states = feature_states(fmap, x_train, theta)
    from .feature_map import prepare_feature_state

    psi = prepare_feature_state(fmap, x, theta).amplitudes
    kernels = np.clip(np.abs(states.conj() @ psi) ** 2, 0.0, 1.0)
    return float((alpha * labels) @ kernels / lam)


def dual_train_accuracy(
    solution: DualSolution,
    labels: Sequence[float],
    gram: np.ndarray,
    lam: float,
) -> float:
    """Sign agreement of the dual decision values with the training labels."""
    labels = np.asarray(labels, dtype=np.float64)
    values = gram @ (solution.alpha * labels) / lam
    predictions = np.where(values >= 0.0, 1.0, -1.0)
    return float(np.mean(predictions == labels))


def nested_qka(
    fmap: TrainableFeatureMap,
    dataset: Sequence[tuple[np.ndarray, int]],
    lam: float,
    spsa_config: SpsaConfig,
    outer_iters: int,
    rng: np.random.Generator,
    theta0: Sequence[float] | None = None,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> NestedQkaResult:
    """Outer SPSA over the map parameters, full dual solve per evaluation.

    Each objective evaluation assembles the Gram matrix at the candidate
    parameters (M(M+1)/2 kernel entries) and solves the dual; the outer loop
    minimizes the optimal dual value. Returns the best evaluated candidate.
    Kernel entries consumed: M(M+1)/2 initial + outer_iters * M(M+1).
    """
    if outer_iters < 0:
        raise ValueError(f"outer_iters must be >= 0, got {outer_iters}")
    xs = [x for x, _ in dataset]
    labels = np.array([label for _, label in dataset], dtype=np.float64)
    m = len(xs)
    entries_per_gram = m * (m + 1) // 2
    count = 0

    def evaluate(theta: np.ndarray) -> DualSolution:
        nonlocal count
        count += entries_per_gram
        gram = kernel_matrix(fmap, xs, theta)
        return solve_dual(gram, labels, lam, tol=tol, max_iters=max_iters)

    theta = (
        np.zeros(fmap.param_dim)
        if theta0 is None
        else np.asarray(theta0, dtype=np.float64).copy()
    )
    best_theta = theta.copy()
    best = evaluate(theta)
    for _ in range(outer_iters):
        mu_k, c_k = spsa_config.gains()
        delta = rng.integers(0, 2, size=theta.shape) * 2 - 1
        theta_plus = theta + c_k * delta
        theta_minus = theta - c_k * delta
        sol_plus = evaluate(theta_plus)
        sol_minus = evaluate(theta_minus)
        for cand_theta, cand in ((theta_plus, sol_plus), (theta_minus, sol_minus)):
            if cand.objective < best.objective:
                best = cand
                best_theta = cand_theta.copy()
        grad = (sol_plus.objective - sol_minus.objective) / (2.0 * c_k) / delta
        theta = theta - mu_k * grad
        spsa_config.step_counter += 1
    return NestedQkaResult(theta=best_theta, solution=best, kernel_entries=count)
