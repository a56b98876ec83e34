"""Composable gradient-descent optimizers.

An optimizer is assembled from three orthogonal pieces:

* a momentum rule that turns the gradient history into a step direction,
* an adaptive-rate rule that produces a per-coordinate rate multiplier,
* an update rule mapping (parameters, direction, rate multiplier) to the
  step that is subtracted from the parameters.

SGD, Adagrad, Adam, and RMSProp are particular choices of the first two
pieces.  The update rule is either the classical additive step, a
multiplicative step whose magnitude is proportional to the current
parameter magnitude (tanh-squashed, so it can never cross zero), or a
convex blend of the two.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MOMENTUM_KINDS = ("identity", "ema")
ADAPTIVE_KINDS = ("identity", "accumulate", "ema")
UPDATE_KINDS = ("additive", "multiplicative", "hybrid")
FAMILIES = ("sgd", "adagrad", "adam", "rmsprop")

DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.99
DEFAULT_EPS = 1e-8
# The accumulating rule divides by sqrt of the running sum of squared
# gradients, which is zero on the first step for any coordinate whose
# gradient is zero; a tiny guard keeps the multiplier finite.
ACCUMULATE_EPS = 1e-10

# Per-family step sizes for the additive rule.
DEFAULT_LR = {"sgd": 0.01, "adagrad": 0.01, "adam": 0.001, "rmsprop": 0.001}
# Per-family (lr_inner, lr_outer) pairs for the multiplicative and hybrid
# rules.  There is deliberately no "adam" entry: the blended rules ship
# defaults only for the three families they were calibrated on.
DEFAULT_MULTIPLICATIVE_RATES = {
    "sgd": (3.0, 0.3),
    "adagrad": (10.0, 0.02),
    "rmsprop": (0.4, 0.2),
}
DEFAULT_HYBRID_RATES = {
    "sgd": (6.0, 0.6),
    "adagrad": (8.0, 0.1),
    "rmsprop": (0.01, 0.1),
}
DEFAULT_MIX = 0.5


class InvalidDimensionError(ValueError):
    """Raised when a parameter dimension is not a positive integer."""


class DimensionMismatchError(ValueError):
    """Raised when parameter, direction, and rate vectors disagree in shape."""


class NonFiniteGradientError(ValueError):
    """Raised when a gradient contains NaN or infinity."""


class InvalidRateError(ValueError):
    """Raised when a rate constant is outside its admissible range."""


class DivergenceError(RuntimeError):
    """Raised when a step produces a non-finite parameter vector."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class MomentumRule:
    """Direction rule: 'identity' passes the raw gradient through, 'ema'
    keeps an exponential moving average with startup-bias correction."""

    kind: str = "identity"
    beta1: float = DEFAULT_BETA1

    def __post_init__(self):
        if self.kind not in MOMENTUM_KINDS:
            raise ValueError(f"unknown momentum kind {self.kind!r}")
        if self.kind == "ema" and not 0.0 <= self.beta1 < 1.0:
            raise InvalidRateError(f"beta1 must be in [0, 1), got {self.beta1}")


@dataclass(frozen=True)
class AdaptiveRule:
    """Rate-multiplier rule: 'identity' is all ones, 'accumulate' divides by
    the root of the gradient-square sum, 'ema' divides by the root of a
    bias-corrected gradient-square moving average."""

    kind: str = "identity"
    beta2: float = DEFAULT_BETA2
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.kind not in ADAPTIVE_KINDS:
            raise ValueError(f"unknown adaptive kind {self.kind!r}")
        if self.kind == "ema" and not 0.0 <= self.beta2 < 1.0:
            raise InvalidRateError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.eps <= 0.0:
            raise InvalidRateError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class UpdateRule:
    """How the direction and rate multiplier become a parameter step.

    additive        needs lr;           step = lr * m * l
    multiplicative  needs lr_inner/out; step = |theta| * tanh(lr_inner*m*l) * lr_outer
    hybrid          needs all four;     step = mix * multiplicative + (1-mix) * additive
    """

    kind: str
    lr: float | None = None
    lr_inner: float | None = None
    lr_outer: float | None = None
    mix: float | None = None

    def __post_init__(self):
        if self.kind not in UPDATE_KINDS:
            raise ValueError(f"unknown update kind {self.kind!r}")
        if self.kind in ("additive", "hybrid"):
            if self.lr is None or self.lr < 0.0:
                raise InvalidRateError(f"lr must be a non-negative real, got {self.lr}")
        if self.kind in ("multiplicative", "hybrid"):
            if self.lr_inner is None or self.lr_inner <= 0.0:
                raise InvalidRateError(f"lr_inner must be positive, got {self.lr_inner}")
            if self.lr_outer is None or not 0.0 < self.lr_outer <= 1.0:
                raise InvalidRateError(f"lr_outer must be in (0, 1], got {self.lr_outer}")
        if self.kind == "hybrid":
            if self.mix is None:
                object.__setattr__(self, "mix", DEFAULT_MIX)
            elif not 0.0 <= self.mix <= 1.0:
                raise InvalidRateError(f"mix must be in [0, 1], got {self.mix}")


@dataclass(frozen=True)
class OptimizerSpec:
    momentum: MomentumRule
    adaptive: AdaptiveRule
    update: UpdateRule


@dataclass
class OptimizerState:
    """Mutable per-parameter-vector buffers: step counter, direction EMA,
    and squared-gradient accumulator."""

    t: int
    m: np.ndarray
    v: np.ndarray


def init_state(dim: int) -> OptimizerState:
    """Fresh state for a parameter vector of the given dimension."""
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"dim must be a positive integer, got {dim!r}")
    return OptimizerState(t=0, m=np.zeros(dim), v=np.zeros(dim))


def make_spec(
    family: str,
    update: UpdateRule,
    *,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    eps: float = DEFAULT_EPS,
) -> OptimizerSpec:
    """Assemble the momentum/adaptive pair for a named optimizer family.

    rmsprop is adam with beta1 = 0: identical variance track, direction
    equal to the raw gradient.
    """
    if family == "sgd":
        mom, ada = MomentumRule("identity"), AdaptiveRule("identity")
    elif family == "adagrad":
        mom = MomentumRule("identity")
        ada = AdaptiveRule("accumulate", eps=ACCUMULATE_EPS)
    elif family == "adam":
        mom = MomentumRule("ema", beta1=beta1)
        ada = AdaptiveRule("ema", beta2=beta2, eps=eps)
    elif family == "rmsprop":
        mom = MomentumRule("ema", beta1=0.0)
        ada = AdaptiveRule("ema", beta2=beta2, eps=eps)
    else:
        raise ValueError(f"unknown optimizer family {family!r}")
    return OptimizerSpec(momentum=mom, adaptive=ada, update=update)


def default_update_rule(family: str, kind: str) -> UpdateRule:
    """Calibrated default rates for a family/update-rule combination."""
    if family not in FAMILIES:
        raise ValueError(f"unknown optimizer family {family!r}")
    if kind == "additive":
        return UpdateRule("additive", lr=DEFAULT_LR[family])
    if kind == "multiplicative":
        try:
            inner, outer = DEFAULT_MULTIPLICATIVE_RATES[family]
        except KeyError:
            raise ValueError(f"no default multiplicative rates for {family!r}") from None
        return UpdateRule("multiplicative", lr_inner=inner, lr_outer=outer)
    if kind == "hybrid":
        try:
            inner, outer = DEFAULT_HYBRID_RATES[family]
        except KeyError:
            raise ValueError(f"no default hybrid rates for {family!r}") from None
        return UpdateRule(
            "hybrid", lr=DEFAULT_LR[family], lr_inner=inner, lr_outer=outer, mix=DEFAULT_MIX
        )
    raise ValueError(f"unknown update kind {kind!r}")


def _check_finite_gradient(g: np.ndarray) -> None:
    finite = np.isfinite(g)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteGradientError(f"gradient has non-finite entry at coordinate {bad}")


def _check_same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        raise DimensionMismatchError(f"mismatched shapes: {sorted(shapes)}")


def momentum(rule: MomentumRule, state: OptimizerState, g: np.ndarray) -> np.ndarray:
    """Step direction for the current gradient; mutates state.m once for 'ema'.

    Requires state.t to already count this step (t >= 1), because the EMA
    startup-bias correction divides by 1 - beta1**t.
    """
    g = np.asarray(g, dtype=float)
    if state.t < 1:
        raise ValueError("state.t must be >= 1; increment the counter before the rules run")
    _check_finite_gradient(g)
    if rule.kind == "identity":
        return g
    state.m *= rule.beta1
    state.m += (1.0 - rule.beta1) * g
    return state.m / (1.0 - rule.beta1 ** state.t)


def adaptive_rate(rule: AdaptiveRule, state: OptimizerState, g: np.ndarray) -> np.ndarray:
    """Per-coordinate rate multiplier; mutates state.v once unless 'identity'."""
    g = np.asarray(g, dtype=float)
    if state.t < 1:
        raise ValueError("state.t must be >= 1; increment the counter before the rules run")
    _check_finite_gradient(g)
    if rule.kind == "identity":
        return np.ones_like(g)
    if rule.kind == "accumulate":
        state.v += g * g
        return 1.0 / (np.sqrt(state.v) + rule.eps)
    state.v *= rule.beta2
    state.v += (1.0 - rule.beta2) * (g * g)
    v_hat = state.v / (1.0 - rule.beta2 ** state.t)
    return 1.0 / (np.sqrt(v_hat) + rule.eps)


def additive_update(theta: np.ndarray, m: np.ndarray, l: np.ndarray, lr: float) -> np.ndarray:
    """Classical step lr * m * l (theta only participates in the shape check)."""
    theta, m, l = (np.asarray(a, dtype=float) for a in (theta, m, l))
    _check_same_shape(theta, m, l)
    if lr < 0.0:
        raise InvalidRateError(f"lr must be non-negative, got {lr}")
    return lr * (m * l)


def multiplicative_update(
    theta: np.ndarray, m: np.ndarray, l: np.ndarray, lr_inner: float, lr_outer: float
) -> np.ndarray:
    """Magnitude-proportional step |theta| * tanh(lr_inner * m * l) * lr_outer.

    Because |tanh| <= 1 and lr_outer <= 1, every coordinate moves by at most
    lr_outer * |theta_i|, so a nonzero coordinate can never cross zero and a
    zero coordinate never moves.
    """
    theta, m, l = (np.asarray(a, dtype=float) for a in (theta, m, l))
    _check_same_shape(theta, m, l)
    if lr_inner <= 0.0:
        raise InvalidRateError(f"lr_inner must be positive, got {lr_inner}")
    if not 0.0 < lr_outer <= 1.0:
        raise InvalidRateError(f"lr_outer must be in (0, 1], got {lr_outer}")
    return np.abs(theta) * np.tanh(lr_inner * (m * l)) * lr_outer


def hybrid_update(
    theta: np.ndarray,
    m: np.ndarray,
    l: np.ndarray,
    lr: float,
    lr_inner: float,
    lr_outer: float,
    mix: float,
) -> np.ndarray:
    """Convex blend: mix * multiplicative + (1 - mix) * additive.

    The endpoints short-circuit to the pure rules, so mix = 0 and mix = 1
    reproduce them exactly.
    """
    if not 0.0 <= mix <= 1.0:
        raise InvalidRateError(f"mix must be in [0, 1], got {mix}")
    if mix == 0.0:
        return additive_update(theta, m, l, lr)
    if mix == 1.0:
        return multiplicative_update(theta, m, l, lr_inner, lr_outer)
    mult = multiplicative_update(theta, m, l, lr_inner, lr_outer)
    add = additive_update(theta, m, l, lr)
    return mix * mult + (1.0 - mix) * add


def apply_update(rule: UpdateRule, theta: np.ndarray, m: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Dispatch to the update function selected by rule.kind."""
    if rule.kind == "additive":
        return additive_update(theta, m, l, rule.lr)
    if rule.kind == "multiplicative":
        return multiplicative_update(theta, m, l, rule.lr_inner, rule.lr_outer)
    return hybrid_update(theta, m, l, rule.lr, rule.lr_inner, rule.lr_outer, rule.mix)


def step(
    spec: OptimizerSpec, state: OptimizerState, theta: np.ndarray, g: np.ndarray
) -> tuple[np.ndarray, OptimizerState]:
    """One optimizer step: bump the counter, run both rules, subtract the update.

    Returns the new parameter vector together with the (mutated) state.  A
    non-finite result raises DivergenceError carrying the step index; the
    gradient is checked before any buffer is touched, so a bad gradient
    leaves the state unchanged.
    """
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_same_shape(theta, g)
    _check_finite_gradient(g)
    state.t += 1
    # Overflow here is the signal we are about to report as DivergenceError,
    # so keep numpy from warning about it.
    with np.errstate(over="ignore", invalid="ignore"):
        m = momentum(spec.momentum, state, g)
        l = adaptive_rate(spec.adaptive, state, g)
        delta = apply_update(spec.update, theta, m, l)
        new_theta = theta - delta
    if not np.isfinite(new_theta).all():
        raise DivergenceError(f"non-finite parameter after step {state.t}", iteration=state.t)
    return new_theta, state
