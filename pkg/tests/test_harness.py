import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from optbench.harness import (
    EvalDistribution,
    Sampler,
    default_eval_distribution,
    default_scan_ranges,
    evaluate_robustness,
    run_trial,
    run_trials,
    sample_eval_config,
    surface_scan,
)
from optbench.objectives import InvalidConfigError, TaskConfig, make_objective
from optbench.optim import UpdateRule, default_update_rule, make_spec, init_state, step

CONVEX = TaskConfig("convex2d", alpha=1.0, beta=20.0, x0=(50.0, 50.0), iterations=100)


def _sgd(lr):
    return make_spec("sgd", UpdateRule("additive", lr=lr))


def test_zero_rate_trial_never_moves():
    record = run_trial(CONVEX, _sgd(0.0))
    assert not record.diverged
    assert record.iterations_run == 100
    assert len(record.distances) == 101
    assert record.final_distance == record.initial_distance
    assert record.score == 1.0
    assert all(d == record.initial_distance for d in record.distances)


def test_score_is_final_over_initial():
    record = run_trial(CONVEX, _sgd(1e-3))
    assert record.initial_distance == pytest.approx(49.0 * math.sqrt(2.0), rel=1e-14)
    assert record.score == record.final_distance / record.initial_distance
    assert record.final_distance < record.initial_distance


def test_trial_started_at_minimum_scores_zero():
    task = TaskConfig("convex2d", alpha=1.0, beta=20.0, x0=(1.0, 1.0), iterations=10)
    record = run_trial(task, _sgd(1e-3))
    assert record.initial_distance == 0.0
    assert record.final_distance == 0.0
    assert record.score == 0.0


def test_diverged_trial_keeps_finite_prefix():
    record = run_trial(CONVEX, _sgd(5.0))
    assert record.diverged
    assert math.isinf(record.final_distance)
    assert math.isinf(record.score)
    assert record.iterations_run < 100
    assert all(math.isfinite(d) for d in record.distances)
    assert len(record.distances) == record.iterations_run + 1


def test_multiplicative_trial_preserves_signs_throughout():
    objective = make_objective(CONVEX)
    spec = make_spec("sgd", default_update_rule("sgd", "multiplicative"))
    theta = np.array(CONVEX.x0)
    state = init_state(2)
    signs0 = np.sign(theta)
    for _ in range(CONVEX.iterations):
        theta, state = step(spec, state, theta, objective.gradient(theta))
        assert np.array_equal(np.sign(theta), signs0)


def test_run_trials_parallel_matches_serial():
    pairs = [(CONVEX, _sgd(lr)) for lr in (1e-4, 1e-3, 1e-2, 5.0)]
    serial = run_trials(pairs, workers=1)
    parallel = run_trials(pairs, workers=2)
    assert serial == parallel


def test_sampler_fixed_value_consumes_no_randomness():
    rng_a = np.random.default_rng(0)
    rng_b = np.random.default_rng(0)
    fixed = Sampler(3.5)
    assert fixed.draw(rng_a) == 3.5
    assert fixed.draw(rng_a) == 3.5
    # rng_a must be in the same state as the untouched rng_b
    assert rng_a.normal() == rng_b.normal()


def test_sampler_rejects_negative_std():
    with pytest.raises(InvalidConfigError):
        Sampler(1.0, -0.5)


def test_default_eval_distributions():
    conv = default_eval_distribution("convex2d")
    assert conv.x0 == (Sampler(50.0, 5.0), Sampler(50.0, 5.0))
    assert conv.alpha == Sampler(1.0, 1.0)
    assert conv.beta == Sampler(20.0, 2.0)
    assert conv.iterations == Sampler(100.0, 10.0)
    rosen = default_eval_distribution("rosenbrock")
    assert rosen.x0 == (Sampler(0.5, 0.1), Sampler(3.0, 1.0))
    assert rosen.alpha == Sampler(1.0, 0.0)  # pinned, not sampled
    assert rosen.beta == Sampler(60.0, 6.0)
    with pytest.raises(InvalidConfigError):
        default_eval_distribution("quadratic")


def test_sample_eval_config_determinism_and_ranges():
    dist = default_eval_distribution("convex2d")
    for index in range(50):
        task = sample_eval_config(dist, seed=123, index=index)
        again = sample_eval_config(dist, seed=123, index=index)
        assert task == again
        assert task.beta > 0.0
        assert task.iterations >= 1
        assert task.seed == index
    t0 = sample_eval_config(dist, seed=123, index=0)
    t1 = sample_eval_config(dist, seed=123, index=1)
    other = sample_eval_config(dist, seed=124, index=0)
    assert t0 != t1
    assert t0 != other


def test_sample_eval_config_fixed_distribution_ignores_index():
    dist = EvalDistribution(
        function="convex2d",
        x0=(Sampler(50.0), Sampler(50.0)),
        alpha=Sampler(1.0),
        beta=Sampler(20.0),
        iterations=Sampler(100.0),
    )
    tasks = {sample_eval_config(dist, seed=5, index=i) for i in range(5)}
    # only the per-trial seed differs
    assert {t.x0 for t in tasks} == {(50.0, 50.0)}
    assert {t.beta for t in tasks} == {20.0}
    assert {t.iterations for t in tasks} == {100}


def test_sample_eval_config_iteration_rounding():
    dist = EvalDistribution(
        function="convex2d",
        x0=(Sampler(50.0), Sampler(50.0)),
        alpha=Sampler(1.0),
        beta=Sampler(20.0),
        iterations=Sampler(99.4),
    )
    assert sample_eval_config(dist, 0, 0).iterations == 99
    tiny = EvalDistribution(
        function="convex2d",
        x0=(Sampler(50.0), Sampler(50.0)),
        alpha=Sampler(1.0),
        beta=Sampler(20.0),
        iterations=Sampler(0.2),
    )
    assert sample_eval_config(tiny, 0, 0).iterations == 1


def test_sample_eval_config_redraws_nonpositive_beta():
    dist = EvalDistribution(
        function="convex2d",
        x0=(Sampler(50.0), Sampler(50.0)),
        alpha=Sampler(1.0),
        beta=Sampler(0.0, 1.0),  # half of raw draws are negative
        iterations=Sampler(10.0),
    )
    for index in range(200):
        assert sample_eval_config(dist, seed=9, index=index).beta > 0.0


def test_evaluate_robustness_single_trial():
    dist = default_eval_distribution("convex2d")
    stats = evaluate_robustness(dist, _sgd(1e-3), n=1, seed=42)
    task = sample_eval_config(dist, seed=42, index=0)
    record = run_trial(task, _sgd(1e-3))
    assert stats.scores == [record.score]
    assert stats.mean == record.score
    assert stats.std == 0.0
    assert stats.n == 1
    assert stats.n_diverged == 0


def test_evaluate_robustness_mixed_divergence():
    stats = evaluate_robustness(
        default_eval_distribution("rosenbrock"), _sgd(5e-3), n=40, seed=11
    )
    assert 0 < stats.n_diverged < 40
    assert stats.n == 40 - stats.n_diverged
    finite = [s for s in stats.scores if math.isfinite(s)]
    assert len(finite) == stats.n
    assert stats.mean == pytest.approx(np.mean(finite), rel=1e-15)
    assert stats.std == pytest.approx(np.std(finite, ddof=1), rel=1e-12)


def test_evaluate_robustness_all_diverged():
    dist = default_eval_distribution("convex2d")
    stats = evaluate_robustness(dist, _sgd(50.0), n=10, seed=0)
    assert stats.n_diverged == 10
    assert stats.n == 0
    assert math.isinf(stats.mean)
    assert stats.std == 0.0
    assert all(math.isinf(s) for s in stats.scores)


def test_evaluate_robustness_seeded_determinism():
    dist = default_eval_distribution("convex2d")
    a = evaluate_robustness(dist, _sgd(1e-3), n=10, seed=7)
    b = evaluate_robustness(dist, _sgd(1e-3), n=10, seed=7)
    c = evaluate_robustness(dist, _sgd(1e-3), n=10, seed=8)
    assert a.scores == b.scores
    assert a.scores != c.scores


def test_evaluate_robustness_parallel_matches_serial():
    dist = default_eval_distribution("convex2d")
    a = evaluate_robustness(dist, _sgd(1e-3), n=12, seed=3, workers=1)
    b = evaluate_robustness(dist, _sgd(1e-3), n=12, seed=3, workers=2)
    assert a == b


def test_evaluate_robustness_rejects_nonpositive_n():
    with pytest.raises(InvalidConfigError):
        evaluate_robustness(default_eval_distribution("convex2d"), _sgd(1e-3), n=0, seed=0)


def test_default_scan_ranges():
    assert default_scan_ranges(CONVEX) == ((40.0, 60.0), (40.0, 60.0))
    task = TaskConfig("convex2d", 1.0, 20.0, (-10.0, 5.0), 10)
    assert default_scan_ranges(task) == ((-12.0, -8.0), (4.0, 6.0))


def test_surface_scan_shape_and_spot_checks():
    from dataclasses import replace

    task = replace(CONVEX, iterations=20)
    grid = surface_scan(task, _sgd(1e-3), grid_size=5)
    assert grid.scores.shape == (5, 5)
    assert grid.x0_axis[0] == 40.0 and grid.x0_axis[-1] == 60.0
    assert grid.x1_axis[0] == 40.0 and grid.x1_axis[-1] == 60.0
    assert all(a < b for a, b in zip(grid.x0_axis, grid.x0_axis[1:]))
    for i in (0, 2, 4):
        for j in (0, 3):
            moved = replace(task, x0=(float(grid.x0_axis[i]), float(grid.x1_axis[j])))
            assert grid.scores[i, j] == run_trial(moved, _sgd(1e-3)).score


def test_surface_scan_collapsed_ranges():
    from dataclasses import replace

    task = replace(CONVEX, iterations=5)
    grid = surface_scan(task, _sgd(1e-3), x0_range=(50.0, 50.0), x1_range=(50.0, 50.0), grid_size=3)
    base = run_trial(task, _sgd(1e-3)).score
    assert_allclose(grid.scores, np.full((3, 3), base), rtol=0)


def test_surface_scan_default_size_and_validation():
    from dataclasses import replace

    task = replace(CONVEX, iterations=3)
    grid = surface_scan(task, _sgd(1e-3))
    assert grid.scores.shape == (25, 25)
    with pytest.raises(InvalidConfigError):
        surface_scan(task, _sgd(1e-3), grid_size=0)
    with pytest.raises(InvalidConfigError):
        surface_scan(task, _sgd(1e-3), x0_range=(2.0, 1.0))


def test_surface_scan_parallel_matches_serial():
    from dataclasses import replace

    task = replace(CONVEX, iterations=10)
    a = surface_scan(task, _sgd(1e-3), grid_size=4, workers=1)
    b = surface_scan(task, _sgd(1e-3), grid_size=4, workers=2)
    assert np.array_equal(a.scores, b.scores)
