"""Two-dimensional benchmark objectives with analytic gradients.

Both functions are parameterized by (alpha, beta): "convex2d" is an
axis-aligned quadratic bowl whose second coordinate is ten times stiffer
than the first, and "rosenbrock" is the classic banana-shaped valley.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FUNCTIONS = ("convex2d", "rosenbrock")


class InvalidConfigError(ValueError):
    """Raised for out-of-range task parameters (e.g. beta <= 0)."""


@dataclass(frozen=True)
class TaskConfig:
    """A fully pinned single-trial setup: which function, its parameters,
    the starting point, and the iteration budget."""

    function: str
    alpha: float
    beta: float
    x0: tuple[float, float]
    iterations: int
    seed: int = 0

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise InvalidConfigError(f"unknown function {self.function!r}")
        if not np.isfinite(self.beta) or self.beta <= 0.0:
            raise InvalidConfigError(f"beta must be positive, got {self.beta}")
        if not np.isfinite(self.alpha):
            raise InvalidConfigError(f"alpha must be finite, got {self.alpha}")
        if len(self.x0) != 2 or not all(np.isfinite(v) for v in self.x0):
            raise InvalidConfigError(f"x0 must be two finite reals, got {self.x0!r}")
        object.__setattr__(self, "x0", (float(self.x0[0]), float(self.x0[1])))
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 1:
            raise InvalidConfigError(f"iterations must be a positive integer, got {self.iterations!r}")


@dataclass(frozen=True)
class Objective:
    name: str
    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    minimum: tuple[float, float]


def convex2d(alpha: float, beta: float) -> Objective:
    """beta*(x1-alpha)^2 + 10*beta*(x2-alpha)^2, minimized at (alpha, alpha)."""
    if beta <= 0.0:
        raise InvalidConfigError(f"beta must be positive, got {beta}")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float(beta * (x[0] - alpha) ** 2 + 10.0 * beta * (x[1] - alpha) ** 2)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.array([2.0 * beta * (x[0] - alpha), 20.0 * beta * (x[1] - alpha)])

    return Objective("convex2d", evaluate, gradient, (alpha, alpha))


def rosenbrock(alpha: float, beta: float) -> Objective:
    """(alpha-x1)^2 + beta*(x2-x1^2)^2, minimized at (alpha, alpha^2)."""
    if beta <= 0.0:
        raise InvalidConfigError(f"beta must be positive, got {beta}")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float((alpha - x[0]) ** 2 + beta * (x[1] - x[0] ** 2) ** 2)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        valley = x[1] - x[0] ** 2
        return np.array([-2.0 * (alpha - x[0]) - 4.0 * beta * x[0] * valley, 2.0 * beta * valley])

    return Objective("rosenbrock", evaluate, gradient, (alpha, alpha**2))


def make_objective(task: TaskConfig) -> Objective:
    if task.function == "convex2d":
        return convex2d(task.alpha, task.beta)
    return rosenbrock(task.alpha, task.beta)


def distance_to_minimum(x: np.ndarray, objective: Objective) -> float:
    """Euclidean distance from x to the objective's minimizer."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - np.asarray(objective.minimum)))


def finite_difference_grad(objective: Objective, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient estimate, one coordinate at a time."""
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = h
        out[i] = (objective.evaluate(x + bump) - objective.evaluate(x - bump)) / (2.0 * h)
    return out
