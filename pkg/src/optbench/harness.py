"""Running optimizers against benchmark tasks.

A trial is one deterministic optimization run recorded as a distance
trajectory.  On top of that this module provides randomized robustness
evaluation (many trials with task parameters drawn from per-field
distributions) and a dense scan of final scores over a grid of starting
points.  Runs that blow up are recorded with an infinite score instead of
raising, so sweeps over unstable configurations always complete.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .objectives import InvalidConfigError, TaskConfig, distance_to_minimum, make_objective
from .optim import (
    DivergenceError,
    NonFiniteGradientError,
    OptimizerSpec,
    init_state,
    step,
)


@dataclass
class TrialRecord:
    """Distance-to-minimum trajectory of a single run.

    distances[0] is the starting distance; one entry is appended per
    completed step.  score = final/initial.  A diverged run keeps the
    finite prefix of its trajectory and reports an infinite final
    distance and score.
    """

    distances: list[float]
    initial_distance: float
    final_distance: float
    score: float
    diverged: bool
    iterations_run: int


def run_trial(task: TaskConfig, spec: OptimizerSpec) -> TrialRecord:
    """Run one full-gradient optimization of the task's objective."""
    objective = make_objective(task)
    theta = np.array(task.x0, dtype=float)
    state = init_state(theta.size)
    initial = distance_to_minimum(theta, objective)
    distances = [initial]
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(task.iterations):
            g = objective.gradient(theta)
            try:
                theta, state = step(spec, state, theta, g)
            except (NonFiniteGradientError, DivergenceError):
                diverged = True
                break
            d = distance_to_minimum(theta, objective)
            if not math.isfinite(d):
                diverged = True
                break
            distances.append(d)
    if diverged:
        final = math.inf
        score = math.inf
    else:
        final = distances[-1]
        if initial > 0.0:
            score = final / initial
        else:
            score = 0.0 if final == 0.0 else math.inf
    return TrialRecord(
        distances=distances,
        initial_distance=initial,
        final_distance=final,
        score=score,
        diverged=diverged,
        iterations_run=len(distances) - 1,
    )


def _run_pair(pair: tuple[TaskConfig, OptimizerSpec]) -> TrialRecord:
    return run_trial(pair[0], pair[1])


def run_trials(
    pairs: list[tuple[TaskConfig, OptimizerSpec]], workers: int = 1
) -> list[TrialRecord]:
    """Run many (task, spec) trials, preserving input order.

    workers > 1 fans out over processes; each trial is deterministic, so
    the result list is identical at any parallelism level.
    """
    if workers <= 1 or len(pairs) <= 1:
        return [run_trial(t, s) for t, s in pairs]
    chunk = max(1, len(pairs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_pair, pairs, chunksize=chunk))


@dataclass(frozen=True)
class Sampler:
    """Normal sampler for one task field; std = 0 means the value is fixed
    and no randomness is consumed."""

    mean: float
    std: float = 0.0

    def __post_init__(self):
        if self.std < 0.0:
            raise InvalidConfigError(f"std must be non-negative, got {self.std}")

    def draw(self, rng: np.random.Generator) -> float:
        if self.std == 0.0:
            return self.mean
        return float(rng.normal(self.mean, self.std))


@dataclass(frozen=True)
class EvalDistribution:
    """Per-field distributions from which robustness trials draw their tasks."""

    function: str
    x0: tuple[Sampler, Sampler]
    alpha: Sampler
    beta: Sampler
    iterations: Sampler


def default_eval_distribution(function: str) -> EvalDistribution:
    """The stock evaluation distributions for the two benchmark tasks."""
    if function == "convex2d":
        return EvalDistribution(
            function="convex2d",
            x0=(Sampler(50.0, 5.0), Sampler(50.0, 5.0)),
            alpha=Sampler(1.0, 1.0),
            beta=Sampler(20.0, 2.0),
            iterations=Sampler(100.0, 10.0),
        )
    if function == "rosenbrock":
        return EvalDistribution(
            function="rosenbrock",
            x0=(Sampler(0.5, 0.1), Sampler(3.0, 1.0)),
            alpha=Sampler(1.0),
            beta=Sampler(60.0, 6.0),
            iterations=Sampler(100.0, 10.0),
        )
    raise InvalidConfigError(f"unknown function {function!r}")


def sample_eval_config(dist: EvalDistribution, seed: int, index: int) -> TaskConfig:
    """Draw one task from the distribution, deterministically per (seed, index).

    beta is redrawn until positive; the iteration budget is rounded to the
    nearest integer and clamped to at least 1.
    """
    rng = np.random.default_rng([seed, index])
    x0 = (dist.x0[0].draw(rng), dist.x0[1].draw(rng))
    alpha = dist.alpha.draw(rng)
    beta = dist.beta.draw(rng)
    while beta <= 0.0:
        beta = dist.beta.draw(rng)
    iterations = max(1, int(round(dist.iterations.draw(rng))))
    return TaskConfig(
        function=dist.function,
        alpha=alpha,
        beta=beta,
        x0=x0,
        iterations=iterations,
        seed=index,
    )


@dataclass
class ScoreStats:
    """Aggregate of a robustness evaluation.

    scores holds one entry per trial in draw order (inf for diverged
    runs); mean/std are computed over the n non-diverged trials only,
    with the sample (n-1) std estimator, std = 0 when n <= 1.
    """

    mean: float
    std: float
    n: int
    n_diverged: int
    scores: list[float]


def evaluate_robustness(
    dist: EvalDistribution, spec: OptimizerSpec, n: int, seed: int, workers: int = 1
) -> ScoreStats:
    """Score the optimizer on n randomly drawn tasks."""
    if n < 1:
        raise InvalidConfigError(f"n must be >= 1, got {n}")
    tasks = [sample_eval_config(dist, seed, i) for i in range(n)]
    records = run_trials([(t, spec) for t in tasks], workers=workers)
    scores = [r.score for r in records]
    included = [s for s in scores if math.isfinite(s)]
    n_diverged = len(scores) - len(included)
    if not included:
        mean, std = math.inf, 0.0
    elif len(included) == 1:
        mean, std = included[0], 0.0
    else:
        mean = float(np.mean(included))
        std = float(np.std(included, ddof=1))
    return ScoreStats(mean=mean, std=std, n=len(included), n_diverged=n_diverged, scores=scores)


@dataclass
class ScoreGrid:
    """Final scores over a grid of starting points: scores[i, j] is the
    trial started at (x0_axis[i], x1_axis[j])."""

    x0_axis: np.ndarray
    x1_axis: np.ndarray
    scores: np.ndarray


def default_scan_ranges(task: TaskConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    """Starting-point box spanning +/-20% around the task's own x0."""
    (a, b) = task.x0
    lo0, hi0 = sorted((0.8 * a, 1.2 * a))
    lo1, hi1 = sorted((0.8 * b, 1.2 * b))
    return (lo0, hi0), (lo1, hi1)


def surface_scan(
    task: TaskConfig,
    spec: OptimizerSpec,
    x0_range: tuple[float, float] | None = None,
    x1_range: tuple[float, float] | None = None,
    grid_size: int = 25,
    workers: int = 1,
) -> ScoreGrid:
    """Run one trial per starting point on a grid_size x grid_size lattice."""
    if grid_size < 1:
        raise InvalidConfigError(f"grid_size must be >= 1, got {grid_size}")
    default0, default1 = default_scan_ranges(task)
    x0_range = default0 if x0_range is None else x0_range
    x1_range = default1 if x1_range is None else x1_range
    for lo, hi in (x0_range, x1_range):
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise InvalidConfigError(f"bad scan range ({lo}, {hi})")
    x0_axis = np.linspace(x0_range[0], x0_range[1], grid_size)
    x1_axis = np.linspace(x1_range[0], x1_range[1], grid_size)
    pairs = [
        (replace(task, x0=(float(a), float(b))), spec)
        for a in x0_axis
        for b in x1_axis
    ]
    records = run_trials(pairs, workers=workers)
    scores = np.array([r.score for r in records]).reshape(grid_size, grid_size)
    return ScoreGrid(x0_axis=x0_axis, x1_axis=x1_axis, scores=scores)
