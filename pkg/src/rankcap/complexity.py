"""Monte Carlo complexity estimation by projected-gradient supremum search.

Estimates are averages over noise draws of the best correlation value found by
projected gradient ascent with random restarts, so every per-draw value is a
lower bound on the true per-draw supremum (up to floating point). The linear
single-layer supremum has a closed form (scaled sum of top singular values of
the noise-data product) used as an exactness oracle throughout the tests.

Noise draw t comes from stream (seed, t); restart j of draw t initializes from
stream (seed, t, j). Results therefore do not depend on execution order or on
the degree of parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import map_indexed
from .linalg import ConstraintSet, ky_fan
from .network import (
    DataSample,
    NetworkSpec,
    backpropagate,
    forward,
    project_weights,
    random_weights,
)
from .validation import as_matrix, as_positive_int, as_real

# plateau early stop: past this floor, quit after `_PATIENCE` iterations
# without relative improvement above `_IMPROVEMENT_RTOL`
_MIN_ITERATIONS = 30
_PATIENCE = 20
_IMPROVEMENT_RTOL = 1e-10


class EstimationFailure(RuntimeError):
    """Every restart of a supremum search diverged."""


# stream role words: SeedSequence zero-pads its entropy, so (s, t) and
# (s, t, 0) would collide; every call site therefore puts a distinct role
# constant right after the seed and uses a fixed key length per role.
ROLE_NOISE = 1
ROLE_INIT = 2
ROLE_DIAMETER = 3
ROLE_SCALAR_NOISE = 4
ROLE_DATA = 5
ROLE_TRAIN = 6
ROLE_SPECGEN = 7


def stream(seed, *key):
    """Deterministic generator keyed by (seed, *key); order-independent.

    Keys that differ only by trailing zeros denote the same stream; callers
    disambiguate with a role word in a fixed position (see constants above).
    """
    mask = (1 << 64) - 1
    words = tuple(int(w) & mask for w in (seed,) + key)
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float
    iterations: int
    restarts: int
    seed: int

    def __post_init__(self):
        as_real(self.step_size, "step_size")
        if self.step_size <= 0.0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        as_positive_int(self.iterations, "iterations")
        as_positive_int(self.restarts, "restarts")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")


def default_optimizer_config(spec, seed=0):
    """step 0.1 divided by the product of spectral caps, 300 iterations,
    8 restarts."""
    cap_product = float(np.prod(spec.spectral_caps))
    step = 0.1 / cap_product if cap_product > 0.0 else 0.1
    return OptimizerConfig(step_size=step, iterations=300, restarts=8, seed=seed)


@dataclass(frozen=True)
class ComplexityEstimate:
    mean: float
    std_error: float
    n_draws: int
    per_draw: tuple
    diagnostics: dict

    def __post_init__(self):
        values = np.asarray(self.per_draw, dtype=np.float64)
        if values.size != self.n_draws:
            raise ValueError(f"{values.size} per-draw values for n_draws={self.n_draws}")
        if self.n_draws >= 1 and abs(self.mean - float(np.mean(values))) > 1e-9:
            raise ValueError("mean does not match per-draw values")
        if self.n_draws >= 2:
            expected = float(np.std(values, ddof=1) / math.sqrt(self.n_draws))
            if abs(self.std_error - expected) > 1e-9:
                raise ValueError("std_error does not match per-draw values")

    @classmethod
    def from_values(cls, values, diagnostics):
        arr = np.asarray(values, dtype=np.float64)
        n = arr.size
        std_error = float(np.std(arr, ddof=1) / math.sqrt(n)) if n >= 2 else 0.0
        return cls(
            mean=float(np.mean(arr)),
            std_error=std_error,
            n_draws=int(n),
            per_draw=tuple(float(v) for v in arr),
            diagnostics=diagnostics,
        )

    def to_dict(self):
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_draws": self.n_draws,
            "per_draw": list(self.per_draw),
            "diagnostics": self.diagnostics,
        }


def _all_finite(weights):
    return all(np.all(np.isfinite(w)) for w in weights)


def _ascend(spec, data, noise, cfg, init_rng, trailing_activation):
    """One restart of projected gradient ascent on the correlation objective.

    Returns (best value seen, final gradient norm, diverged flag). The iterate
    is projected after every step, so each evaluated value is attained by a
    member of the constraint class.
    """
    weights = project_weights(random_weights(spec, init_rng), spec)
    scale = 1.0 / data.m
    best = -math.inf
    stale = 0
    grad_norm = math.nan
    for iteration in range(cfg.iterations):
        trace = forward(weights, spec, data, activate_last=trailing_activation)
        value = float(np.sum(noise * trace.outputs) * scale)
        if not math.isfinite(value):
            return best, grad_norm, True
        if value - best > _IMPROVEMENT_RTOL * max(1.0, abs(value)):
            best = value
            stale = 0
        else:
            stale += 1
            if iteration >= _MIN_ITERATIONS and stale >= _PATIENCE:
                break
        grads = backpropagate(
            weights, spec, data, trace, noise * scale, activate_last=trailing_activation
        )
        grad_norm = float(math.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        with np.errstate(over="ignore", invalid="ignore"):
            stepped = tuple(w + cfg.step_size * g for w, g in zip(weights, grads))
        if not _all_finite(stepped):
            return best, grad_norm, True
        weights = project_weights(stepped, spec)
    return best, grad_norm, False


def _draw_noise(kind, rng, shape):
    if kind == "gaussian":
        return rng.standard_normal(shape)
    if kind == "rademacher":
        return rng.integers(0, 2, size=shape) * 2.0 - 1.0
    raise ValueError(f"unknown noise kind {kind!r}")


def _estimate(spec, data, cfg, n_draws, noise_kind, trailing_activation):
    if not isinstance(spec, NetworkSpec):
        raise ValueError("spec must be a NetworkSpec")
    if not isinstance(data, DataSample):
        raise ValueError("data must be a DataSample")
    as_positive_int(n_draws, "n_draws", minimum=2)
    shape = (spec.output_dim, data.m)

    def one_draw(t):
        noise = _draw_noise(noise_kind, stream(cfg.seed, ROLE_NOISE, t), shape)
        best_value = -math.inf
        best_restart = -1
        best_grad = math.nan
        diverged = 0
        for j in range(cfg.restarts):
            value, grad_norm, bad = _ascend(
                spec, data, noise, cfg, stream(cfg.seed, ROLE_INIT, t, j), trailing_activation
            )
            if bad:
                diverged += 1
                continue
            if value > best_value:
                best_value = value
                best_restart = j
                best_grad = grad_norm
        if best_restart < 0:
            raise EstimationFailure(
                f"draw {t}: all {cfg.restarts} restarts diverged "
                f"(step_size {cfg.step_size:g})"
            )
        return best_value, best_restart, best_grad, diverged

    results = map_indexed(one_draw, n_draws)
    diagnostics = {
        "best_restart": [r[1] for r in results],
        "grad_norm": [r[2] for r in results],
        "diverged": [r[3] for r in results],
        "noise": noise_kind,
        "trailing_activation": bool(trailing_activation),
    }
    return ComplexityEstimate.from_values([r[0] for r in results], diagnostics)


def estimate_gaussian_complexity(spec, data, cfg, n_draws, *, trailing_activation=False):
    """Monte Carlo estimate of the per-output-coordinate Gaussian complexity
    of the constrained network class on `data` (1/m normalization)."""
    return _estimate(spec, data, cfg, n_draws, "gaussian", trailing_activation)


def estimate_rademacher_complexity(spec, data, cfg, n_draws, *, trailing_activation=False):
    """Same search with uniform sign noise instead of Gaussian noise."""
    return _estimate(spec, data, cfg, n_draws, "rademacher", trailing_activation)


def single_layer_exact_sup(noise, data, constraint):
    """Exact supremum of (1/m) <noise, W X^T> over rank/spectral-capped W:
    cap times the sum of the top `rank` singular values of noise @ X, over m.
    Attained at cap times the truncated outer product of the leading factors.
    """
    g = as_matrix(noise, "noise")
    if not isinstance(constraint, ConstraintSet):
        raise ValueError("constraint must be a ConstraintSet")
    if g.shape[1] != data.m:
        raise ValueError(f"noise has {g.shape[1]} columns, expected m={data.m}")
    product = g @ data.x
    return constraint.spectral * ky_fan(product, constraint.rank) / data.m


def norm_based_complexity_linear(data, cap, rank_cap, n_draws, seed):
    """Monte Carlo estimate of the scalar-noise norm complexity of the linear
    class: per draw, cap times the norm of the noise-averaged input.

    The closed form never involves the rank, so `rank_cap` is validated and
    then provably ignored: estimates are identical for every cap at fixed seed.
    This operation exists to demonstrate that insensitivity.
    """
    if not isinstance(data, DataSample):
        raise ValueError("data must be a DataSample")
    as_real(cap, "cap", minimum=0.0)
    as_positive_int(rank_cap, "rank_cap")
    as_positive_int(n_draws, "n_draws", minimum=2)

    def one_draw(t):
        gamma = stream(seed, ROLE_SCALAR_NOISE, t).standard_normal(data.m)
        averaged = data.x.T @ gamma / data.m
        return float(cap * np.linalg.norm(averaged))

    values = map_indexed(one_draw, n_draws)
    return ComplexityEstimate.from_values(values, diagnostics={})


def _diameter_restart(spec, data, cfg, rng_a, rng_b):
    """Maximize the Frobenius distance between the sample images of two
    independent constrained networks (trailing activation on every layer)."""
    first = project_weights(random_weights(spec, rng_a), spec)
    second = project_weights(random_weights(spec, rng_b), spec)
    best = -math.inf
    stale = 0
    for iteration in range(cfg.iterations):
        trace_a = forward(first, spec, data, activate_last=True)
        trace_b = forward(second, spec, data, activate_last=True)
        diff = trace_a.outputs - trace_b.outputs
        value = float(np.linalg.norm(diff))
        if not math.isfinite(value):
            return best, True
        if value - best > _IMPROVEMENT_RTOL * max(1.0, abs(value)):
            best = value
            stale = 0
        else:
            stale += 1
            if iteration >= _MIN_ITERATIONS and stale >= _PATIENCE:
                break
        if value == 0.0:
            direction = np.zeros_like(diff)
        else:
            direction = diff / value
        grads_a = backpropagate(first, spec, data, trace_a, direction, activate_last=True)
        grads_b = backpropagate(second, spec, data, trace_b, -direction, activate_last=True)
        with np.errstate(over="ignore", invalid="ignore"):
            stepped_a = tuple(w + cfg.step_size * g for w, g in zip(first, grads_a))
            stepped_b = tuple(w + cfg.step_size * g for w, g in zip(second, grads_b))
        if not (_all_finite(stepped_a) and _all_finite(stepped_b)):
            return best, True
        first = project_weights(stepped_a, spec)
        second = project_weights(stepped_b, spec)
    return best, False


def estimate_diameter(spec, data, cfg):
    """Best-over-restarts lower bound on the diameter of the sample image set
    of the constrained class with activation after every layer."""
    if not isinstance(spec, NetworkSpec):
        raise ValueError("spec must be a NetworkSpec")
    best = -math.inf
    diverged = 0
    for j in range(cfg.restarts):
        value, bad = _diameter_restart(
            spec,
            data,
            cfg,
            stream(cfg.seed, ROLE_DIAMETER, j, 0),
            stream(cfg.seed, ROLE_DIAMETER, j, 1),
        )
        if bad:
            diverged += 1
            continue
        best = max(best, value)
    if not math.isfinite(best):
        raise EstimationFailure(f"all {cfg.restarts} diameter restarts diverged")
    return best
