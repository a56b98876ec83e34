"""Randomized properties of the update rules.

The magnitude-proportional rule promises two exact guarantees: no step
moves a coordinate by more than lr_outer times its current magnitude, and
no nonzero coordinate ever changes sign.  Both are checked over a large
randomized sample (well past the 10,000-step mark) plus a hypothesis
sweep of awkward rate values.
"""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from optbench.optim import (
    InvalidRateError,
    additive_update,
    hybrid_update,
    multiplicative_update,
)

N_RANDOM_STEPS = 10_000


def _random_inputs(rng, dim=4):
    theta = rng.uniform(-10.0, 10.0, dim)
    scale = 10.0 ** rng.uniform(-2.0, 2.0)
    m = rng.normal(0.0, scale, dim)
    l = rng.normal(0.0, 1.0, dim)
    lr_inner = 10.0 ** rng.uniform(-3.0, 3.0)
    lr_outer = 1.0 - rng.uniform(0.0, 1.0)  # in (0, 1]
    return theta, m, l, lr_inner, lr_outer


def test_sign_preservation_and_update_bound_over_many_steps():
    rng = np.random.default_rng(2024)
    for _ in range(N_RANDOM_STEPS):
        theta, m, l, lr_inner, lr_outer = _random_inputs(rng)
        delta = multiplicative_update(theta, m, l, lr_inner, lr_outer)
        assert np.all(np.abs(delta) <= lr_outer * np.abs(theta))
        new_theta = theta - delta
        nonzero = theta != 0.0
        assert np.all(np.sign(new_theta[nonzero]) == np.sign(theta[nonzero]))


def test_zero_coordinates_never_move():
    theta = np.array([0.0, -3.0, 0.0, 7.0])
    rng = np.random.default_rng(9)
    for _ in range(100):
        m = rng.normal(0.0, 100.0, 4)
        l = rng.normal(0.0, 100.0, 4)
        delta = multiplicative_update(theta, m, l, 5.0, 1.0)
        assert delta[0] == 0.0 and delta[2] == 0.0


def test_hybrid_endpoints_reduce_to_pure_rules():
    rng = np.random.default_rng(11)
    for _ in range(1_000):
        theta, m, l, lr_inner, lr_outer = _random_inputs(rng)
        lr = 10.0 ** rng.uniform(-4.0, 1.0)
        as_additive = hybrid_update(theta, m, l, lr, lr_inner, lr_outer, mix=0.0)
        as_mult = hybrid_update(theta, m, l, lr, lr_inner, lr_outer, mix=1.0)
        assert np.array_equal(as_additive, additive_update(theta, m, l, lr))
        assert np.array_equal(as_mult, multiplicative_update(theta, m, l, lr_inner, lr_outer))


def test_hybrid_is_exact_convex_combination():
    rng = np.random.default_rng(13)
    for _ in range(1_000):
        theta, m, l, lr_inner, lr_outer = _random_inputs(rng)
        lr = 10.0 ** rng.uniform(-4.0, 1.0)
        mix = rng.uniform(0.0, 1.0)
        blended = hybrid_update(theta, m, l, lr, lr_inner, lr_outer, mix)
        mult = multiplicative_update(theta, m, l, lr_inner, lr_outer)
        add = additive_update(theta, m, l, lr)
        assert np.array_equal(blended, mix * mult + (1.0 - mix) * add)


def test_hybrid_step_magnitude_bound():
    # |delta| <= mix * lr_outer * |theta| + (1 - mix) * lr * |m * l|,
    # up to a couple of rounding units from the final additions.
    rng = np.random.default_rng(17)
    for _ in range(2_000):
        theta, m, l, lr_inner, lr_outer = _random_inputs(rng)
        lr = 10.0 ** rng.uniform(-4.0, 1.0)
        mix = rng.uniform(0.0, 1.0)
        delta = hybrid_update(theta, m, l, lr, lr_inner, lr_outer, mix)
        bound = mix * lr_outer * np.abs(theta) + (1.0 - mix) * lr * np.abs(m * l)
        assert np.all(np.abs(delta) <= bound * (1.0 + 1e-12) + 1e-300)


@given(
    theta=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    m=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    l=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    lr_inner=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
    lr_outer=st.floats(min_value=1e-9, max_value=1.0, allow_nan=False),
)
def test_multiplicative_bound_holds_for_adversarial_rates(theta, m, l, lr_inner, lr_outer):
    arr = np.array([theta])
    delta = multiplicative_update(arr, np.array([m]), np.array([l]), lr_inner, lr_outer)
    assert abs(delta[0]) <= lr_outer * abs(theta)
    # Never crosses zero.  At lr_outer exactly 1 with a saturated tanh the
    # coordinate may land exactly on zero, which is still within the bound.
    moved = theta - delta[0]
    if theta > 0.0:
        assert moved >= 0.0
    elif theta < 0.0:
        assert moved <= 0.0


@given(lr_outer=st.floats(min_value=1.0000000001, max_value=100.0))
def test_outer_rate_above_one_always_rejected(lr_outer):
    with pytest.raises(InvalidRateError):
        multiplicative_update(np.ones(1), np.ones(1), np.ones(1), 1.0, lr_outer)
