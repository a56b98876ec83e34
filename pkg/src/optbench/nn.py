"""A small dense classifier trained without any autograd framework.

The network is a plain multi-layer perceptron with relu or tanh hidden
activations and a softmax cross-entropy head.  Gradients come from a
hand-written backward pass (checked against finite differences in the
test suite).  Every weight matrix and bias vector is optimized as its own
flat parameter vector with its own optimizer state, so any update rule
from the optim module can drive training.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .optim import (
    DivergenceError,
    NonFiniteGradientError,
    OptimizerSpec,
    OptimizerState,
    init_state,
    step,
)

ACTIVATIONS = ("relu", "tanh")

# Biases start at a small nonzero constant instead of zero so that
# magnitude-proportional update rules are not pinned at their zero fixed
# point from the first step.
BIAS_INIT = 0.01


def xavier_init(
    fan_in: int, fan_out: int, gain: float, rng: np.random.Generator, fan_mode: str = "product"
) -> np.ndarray:
    """Draw a (fan_in, fan_out) weight matrix from N(0, std^2) with
    std = gain * sqrt(2 / (fan_in * fan_out)).

    fan_mode='sum' switches the denominator to fan_in + fan_out, the more
    common normalization, for comparison runs.
    """
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be positive, got {fan_in}, {fan_out}")
    if gain <= 0.0:
        raise ValueError(f"gain must be positive, got {gain}")
    if fan_mode == "product":
        denom = fan_in * fan_out
    elif fan_mode == "sum":
        denom = fan_in + fan_out
    else:
        raise ValueError(f"unknown fan_mode {fan_mode!r}")
    std = gain * math.sqrt(2.0 / denom)
    return rng.normal(0.0, std, size=(fan_in, fan_out))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy, computed via log-sum-exp so that large
    logits cannot overflow."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    return float(-log_probs[np.arange(n), labels].mean())


@dataclass
class ForwardCache:
    """Intermediate activations retained for the backward pass."""

    inputs: list[np.ndarray]  # input to each layer (inputs[0] is the batch)
    pre: list[np.ndarray]  # pre-activation of each layer
    n_layers: int


class MLP:
    """Fully connected network: layer_sizes like [2, 16, 2], hidden
    activations applied to every layer except the last (the logits)."""

    def __init__(
        self,
        layer_sizes: list[int],
        activation: str = "relu",
        gain: float = 1.0,
        rng: np.random.Generator | None = None,
        fan_mode: str = "product",
    ):
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = np.random.default_rng(0) if rng is None else rng
        self.layer_sizes = list(layer_sizes)
        self.activation = activation
        self.weights = [
            xavier_init(n_in, n_out, gain, rng, fan_mode)
            for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:])
        ]
        self.biases = [np.full(n_out, BIAS_INIT) for n_out in layer_sizes[1:]]

    def parameters(self) -> list[np.ndarray]:
        """All trainable tensors, interleaved [W1, b1, W2, b2, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return np.tanh(z)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
        """Return (logits, cache) for a (batch, n_in) input."""
        a = np.asarray(x, dtype=float)
        if a.ndim != 2 or a.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected (batch, {self.layer_sizes[0]}) input, got {a.shape}")
        inputs = [a]
        pre = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            if i < len(self.weights) - 1:
                a = self._act(z)
                inputs.append(a)
        return pre[-1], ForwardCache(inputs=inputs, pre=pre, n_layers=len(self.weights))

    def backward(self, cache: ForwardCache, labels: np.ndarray) -> list[np.ndarray]:
        """Mean cross-entropy gradients for every tensor, in parameters() order."""
        labels = np.asarray(labels)
        if cache.n_layers != len(self.weights) or len(cache.pre) != len(self.weights):
            raise ValueError("cache does not match this model")
        n = cache.inputs[0].shape[0]
        if labels.shape != (n,):
            raise ValueError(f"expected {n} labels, got shape {labels.shape}")
        probs = softmax(cache.pre[-1])
        delta = probs
        delta[np.arange(n), labels] -= 1.0
        delta /= n
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = cache.inputs[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                da = delta @ self.weights[i].T
                if self.activation == "relu":
                    delta = da * (cache.pre[i - 1] > 0.0)
                else:
                    delta = da * (1.0 - cache.inputs[i] ** 2)
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out.append(gw)
            out.append(gb)
        return out

    def evaluate(self, x: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
        """(mean loss, accuracy) on a labeled batch."""
        logits, _ = self.forward(x)
        loss = cross_entropy(logits, labels)
        accuracy = float((logits.argmax(axis=1) == labels).mean())
        return loss, accuracy


@dataclass
class SyntheticDataset:
    """Two interleaved half-moon point clouds with an 80/20 split."""

    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray


def make_dataset(n: int = 400, noise: float = 0.15, seed: int = 0) -> SyntheticDataset:
    """Generate the two-moons classification set, deterministically per seed."""
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    if noise < 0.0:
        raise ValueError(f"noise must be non-negative, got {noise}")
    n_outer = n - n // 2
    n_inner = n // 2
    t_outer = np.linspace(0.0, math.pi, n_outer)
    t_inner = np.linspace(0.0, math.pi, n_inner)
    outer = np.column_stack([np.cos(t_outer), np.sin(t_outer)])
    inner = np.column_stack([1.0 - np.cos(t_inner), 0.5 - np.sin(t_inner)])
    features = np.vstack([outer, inner])
    labels = np.concatenate([np.zeros(n_outer, dtype=int), np.ones(n_inner, dtype=int)])
    rng = np.random.default_rng(seed)
    if noise > 0.0:
        features = features + rng.normal(0.0, noise, features.shape)
    perm = rng.permutation(n)
    n_train = min(n - 1, max(1, int(round(0.8 * n))))
    return SyntheticDataset(
        features=features,
        labels=labels,
        train_idx=perm[:n_train],
        val_idx=perm[n_train:],
    )


@dataclass(frozen=True)
class TrainingConfig:
    gain: float
    epochs: int
    batch_size: int
    seed: int
    optimizer: OptimizerSpec | None = None
    fan_mode: str = "product"

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def sample_training_config(seed: int, index: int, batch_size: int = 32) -> TrainingConfig:
    """Draw one training configuration, deterministically per (seed, index).

    gain ~ Gamma(shape 1, scale 2.5), redrawn while below 1e-3 so the
    network never starts effectively all-zero; epochs ~ Normal(60, 10)
    rounded and clamped to at least 1.  The optimizer slot is left for the
    caller so the same (gain, epochs, seed) triple can be reused across
    update rules for paired comparisons.
    """
    rng = np.random.default_rng([seed, index])
    gain = float(rng.gamma(1.0, 2.5))
    while gain < 1e-3:
        gain = float(rng.gamma(1.0, 2.5))
    epochs = max(1, int(round(rng.normal(60.0, 10.0))))
    run_seed = int(rng.integers(0, 2**31 - 1))
    return TrainingConfig(gain=gain, epochs=epochs, batch_size=batch_size, seed=run_seed)


@dataclass
class EpochMetrics:
    epoch: int
    train_accuracy: float
    val_accuracy: float
    train_loss: float


@dataclass
class TrainResult:
    """Per-epoch metric series plus audit counters.

    sign_flips counts (step, coordinate) events where a parameter whose
    initial value was nonzero is observed with a different sign after an
    optimizer step; pure multiplicative training must keep this at 0.
    """

    metrics: list[EpochMetrics]
    sign_flips: int
    diverged: bool
    epochs_run: int

    def final(self) -> EpochMetrics:
        return self.metrics[-1]

    def at_epoch(self, epoch: int) -> EpochMetrics:
        """Metrics recorded at the given 1-based epoch (clamped to the run)."""
        return self.metrics[min(epoch, len(self.metrics)) - 1]


def train(model: MLP, dataset: SyntheticDataset, config: TrainingConfig) -> TrainResult:
    """Mini-batch training of the model on the dataset's train split.

    One OptimizerState per tensor; batch order is reshuffled every epoch
    from the config seed, so the whole run is reproducible.  If any step
    diverges, the run is truncated and flagged rather than raised.
    """
    if config.optimizer is None:
        raise ValueError("config.optimizer must be set before training")
    x_train = dataset.features[dataset.train_idx]
    y_train = dataset.labels[dataset.train_idx]
    x_val = dataset.features[dataset.val_idx]
    y_val = dataset.labels[dataset.val_idx]
    params = model.parameters()
    states = [init_state(p.size) for p in params]
    initial_signs = [np.sign(p) for p in params]
    rng = np.random.default_rng(config.seed)
    metrics: list[EpochMetrics] = []
    sign_flips = 0
    diverged = False
    n_train = len(y_train)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(n_train)
            for start in range(0, n_train, config.batch_size):
                batch = order[start : start + config.batch_size]
                _, cache = model.forward(x_train[batch])
                grads = model.backward(cache, y_train[batch])
                try:
                    for p, g, st in zip(params, grads, states):
                        new_flat, _ = step(config.optimizer, st, p.ravel(), g.ravel())
                        p[...] = new_flat.reshape(p.shape)
                except (NonFiniteGradientError, DivergenceError):
                    diverged = True
                    break
                for p, s0 in zip(params, initial_signs):
                    sign_flips += int(((np.sign(p) != s0) & (s0 != 0.0)).sum())
            if diverged:
                break
            train_loss, train_acc = model.evaluate(x_train, y_train)
            _, val_acc = model.evaluate(x_val, y_val)
            if not math.isfinite(train_loss):
                diverged = True
                break
            metrics.append(
                EpochMetrics(
                    epoch=epoch,
                    train_accuracy=train_acc,
                    val_accuracy=val_acc,
                    train_loss=train_loss,
                )
            )
    if not metrics:
        # Diverged before finishing the first epoch: record the untrained model.
        train_loss, train_acc = model.evaluate(x_train, y_train)
        _, val_acc = model.evaluate(x_val, y_val)
        if not math.isfinite(train_loss):
            train_loss, train_acc, val_acc = math.inf, 0.0, 0.0
        metrics = [EpochMetrics(0, train_acc, val_acc, train_loss)]
    return TrainResult(
        metrics=metrics, sign_flips=sign_flips, diverged=diverged, epochs_run=len(metrics)
    )


@dataclass(frozen=True)
class ProtocolSettings:
    """Everything a randomized training run needs except the drawn values."""

    dataset_n: int = 400
    dataset_noise: float = 0.15
    dataset_seed: int = 0
    hidden: tuple[int, ...] = (16,)
    activation: str = "relu"
    batch_size: int = 32
    fan_mode: str = "product"


def _train_one(args: tuple[ProtocolSettings, TrainingConfig]) -> TrainResult:
    settings, config = args
    dataset = make_dataset(settings.dataset_n, settings.dataset_noise, settings.dataset_seed)
    sizes = [2, *settings.hidden, 2]
    model = MLP(
        sizes,
        activation=settings.activation,
        gain=config.gain,
        rng=np.random.default_rng(config.seed),
        fan_mode=config.fan_mode,
    )
    return train(model, dataset, config)


def train_sampled_configs(
    settings: ProtocolSettings,
    optimizer: OptimizerSpec,
    n_configs: int,
    master_seed: int,
    workers: int = 1,
) -> tuple[list[TrainingConfig], list[TrainResult]]:
    """Run the randomized protocol: n_configs draws of (gain, epochs, seed),
    each trained from scratch with the given optimizer."""
    configs = [
        replace(
            sample_training_config(master_seed, i, batch_size=settings.batch_size),
            optimizer=optimizer,
            fan_mode=settings.fan_mode,
        )
        for i in range(n_configs)
    ]
    jobs = [(settings, c) for c in configs]
    if workers <= 1 or len(jobs) <= 1:
        results = [_train_one(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_train_one, jobs, chunksize=chunk))
    return configs, results
