"""Minibatch SGD that re-projects onto the rank/spectral constraint set after
every step, so every iterate (including the returned one) satisfies the caps.

Losses are scalar-output binary losses bounded in [0, 1] with a recorded
Lipschitz constant: a clipped margin loss (constant 1) and a clipped squared
loss (constant 2).
"""

from dataclasses import dataclass, field

import numpy as np

from .complexity import ROLE_TRAIN, stream
from .network import DataSample, backpropagate, forward, project_weights, random_weights
from .validation import as_real

LOSS_LIPSCHITZ = {"margin": 1.0, "squared": 2.0}


class TrainingFailure(RuntimeError):
    """Raised when training produces non-finite values; carries the trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = tuple(trace)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    learning_rate: float
    batch_size: int
    seed: int
    label_noise: float = 0.0
    loss: str = "margin"

    def __post_init__(self):
        object.__setattr__(self, "epochs", int(self.epochs))
        object.__setattr__(self, "batch_size", int(self.batch_size))
        object.__setattr__(self, "seed", int(self.seed))
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        rate = as_real(self.learning_rate, "learning_rate")
        if rate <= 0.0:
            raise ValueError(f"learning_rate must be > 0, got {rate}")
        object.__setattr__(self, "learning_rate", rate)
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        noise = as_real(self.label_noise, "label_noise", minimum=0.0, maximum=1.0)
        object.__setattr__(self, "label_noise", noise)
        if self.loss not in LOSS_LIPSCHITZ:
            raise ValueError(f"loss must be one of {sorted(LOSS_LIPSCHITZ)}, got {self.loss!r}")

    @property
    def lipschitz(self):
        return LOSS_LIPSCHITZ[self.loss]


@dataclass(frozen=True)
class TrainResult:
    weights: tuple
    trace: tuple = field(default=())


def loss_values(kind, outputs, labels):
    """Per-sample loss for a (1, n) output matrix.

    margin: hinge max(0, 1 - y f), Lipschitz 1, unbounded above.
    squared: (f - y)^2 clipped to [0, 1], Lipschitz 2.
    clipped_margin: hinge clipped to [0, 1]; the bounded evaluation loss for
    generalization-gap reports, Lipschitz 1.
    """
    outputs = np.asarray(outputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    f = outputs[0]
    if kind == "margin":
        return np.maximum(1.0 - labels * f, 0.0)
    if kind == "squared":
        return np.minimum((f - labels) ** 2, 1.0)
    if kind == "clipped_margin":
        return np.clip(1.0 - labels * f, 0.0, 1.0)
    raise ValueError(f"unknown loss {kind!r}")


def loss_output_grad(kind, outputs, labels):
    """d(per-sample loss)/d(output), same shape as outputs; zero at kinks."""
    outputs = np.asarray(outputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    f = outputs[0]
    if kind == "margin":
        margin = 1.0 - labels * f
        grad = np.where(margin > 0.0, -labels, 0.0)
    elif kind == "squared":
        residual = f - labels
        grad = np.where(residual**2 < 1.0, 2.0 * residual, 0.0)
    elif kind == "clipped_margin":
        margin = 1.0 - labels * f
        active = (margin > 0.0) & (margin < 1.0)
        grad = np.where(active, -labels, 0.0)
    else:
        raise ValueError(f"unknown loss {kind!r}")
    return grad[None, :]


def mean_loss(weights, spec, data, labels, kind):
    outputs = forward(weights, spec, data).outputs
    return float(np.mean(loss_values(kind, outputs, labels)))


def train_projected_sgd(spec, data, labels, cfg):
    """Fit spec-shaped weights to (data, labels) by projected minibatch SGD.

    Projection runs after every gradient step; the trace holds the full-sample
    mean loss after each epoch.  Non-finite losses or weights raise
    TrainingFailure with the trace collected so far.
    """
    if spec.output_dim != 1:
        raise ValueError(f"trainer needs scalar output, got output dim {spec.output_dim}")
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (data.m,):
        raise ValueError(f"labels must have shape ({data.m},), got {labels.shape}")
    if not np.all(np.isfinite(labels)):
        raise ValueError("labels must be finite")

    weights = project_weights(random_weights(spec, stream(cfg.seed, ROLE_TRAIN, 0)), spec)
    if cfg.label_noise > 0.0:
        flips = stream(cfg.seed, ROLE_TRAIN, 2).random(data.m) < cfg.label_noise
        labels = np.where(flips, -labels, labels)

    shuffle_rng = stream(cfg.seed, ROLE_TRAIN, 1)
    trace = []
    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(data.m)
        for start in range(0, data.m, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch = DataSample.from_array(data.x[idx])
            batch_labels = labels[idx]
            trace_fwd = forward(weights, spec, batch)
            grad_out = loss_output_grad(cfg.loss, trace_fwd.outputs, batch_labels) / len(idx)
            grads = backpropagate(weights, spec, batch, trace_fwd, grad_out)
            with np.errstate(over="ignore", invalid="ignore"):
                stepped = tuple(
                    w - cfg.learning_rate * g for w, g in zip(weights, grads)
                )
            if not all(np.all(np.isfinite(w)) for w in stepped):
                raise TrainingFailure("non-finite weights during SGD step", trace)
            weights = project_weights(stepped, spec)
        epoch_loss = mean_loss(weights, spec, data, labels, cfg.loss)
        if not np.isfinite(epoch_loss):
            raise TrainingFailure("non-finite epoch loss", trace)
        trace.append(epoch_loss)
    return TrainResult(weights=weights, trace=tuple(trace))
