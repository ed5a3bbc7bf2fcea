"""Simultaneous-perturbation stochastic approximation.

One gradient estimate costs exactly two objective evaluations regardless of
dimension: both points are perturbed along a single random direction with
independent +/-1 components.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]


@dataclass
class SpsaConfig:
    """Gains for the minimization step.

    With `decay` unset the gains are constant, which keeps the effective
    learning rate alive for tracking time-varying targets. With `decay` set
    the classic mu/k^0.602 and c/k^0.101 schedules are used.
    """

    mu: float = 0.1
    c: float = 0.1
    decay: bool = False
    step_counter: int = 0

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.c <= 0:
            raise ValueError(f"c must be > 0, got {self.c}")

    def gains(self) -> tuple[float, float]:
        if not self.decay:
            return self.mu, self.c
        k = self.step_counter + 1
        return self.mu / k**0.602, self.c / k**0.101


def spsa_gradient(
    f: Objective, theta: Sequence[float], c: float, rng: np.random.Generator
) -> np.ndarray:
    """Two-evaluation gradient estimate of f at theta with perturbation size c."""
    if c <= 0:
        raise ValueError(f"c must be > 0, got {c}")
    theta = np.asarray(theta, dtype=np.float64)
    delta = rng.integers(0, 2, size=theta.shape) * 2 - 1
    f_plus = float(f(theta + c * delta))
    f_minus = float(f(theta - c * delta))
    if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
        raise FloatingPointError(
            f"objective returned a non-finite value: f+={f_plus}, f-={f_minus}"
        )
    return (f_plus - f_minus) / (2.0 * c) / delta


def spsa_step(
    f: Objective, theta: Sequence[float], config: SpsaConfig, rng: np.random.Generator
) -> np.ndarray:
    """One minimization step; advances the config's step counter."""
    mu_k, c_k = config.gains()
    grad = spsa_gradient(f, theta, c_k, rng)
    config.step_counter += 1
    return np.asarray(theta, dtype=np.float64) - mu_k * grad
