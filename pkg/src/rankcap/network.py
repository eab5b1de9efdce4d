"""Rank-constrained multilayer perceptron without biases.

Layers compute W_i z with the activation applied after layers 1..L-1 only;
`activate_last=True` switches on the trailing-activation variant used by the
diameter estimator. The module exposes the forward pass with cached pre/post
images, the noise-correlation objective, its exact reverse-mode gradient, and
whole-network constraint projection, plus JSON serialization of (spec, weights).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import ConstraintSet, project_rank_spectral
from .validation import as_matrix, as_real

ACTIVATION_KINDS = ("relu", "leaky_relu", "identity")


class ShapeMismatch(ValueError):
    """A weight or noise matrix does not chain with the architecture."""


@dataclass(frozen=True)
class Activation:
    """Piecewise-linear scalar activation, Lipschitz constant 1."""

    kind: str
    alpha: float = 0.01

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.kind!r}, expected one of {ACTIVATION_KINDS}")
        alpha = as_real(self.alpha, "alpha")
        if self.kind == "leaky_relu" and not 0.0 < alpha < 1.0:
            raise ValueError(f"leaky_relu slope must be in (0, 1), got {alpha}")

    @property
    def lipschitz(self):
        return 1.0

    def apply(self, z):
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, z, self.alpha * z)
        return z

    def derivative(self, pre):
        # subgradient at 0 is 0 for relu, alpha for leaky_relu
        if self.kind == "relu":
            return (pre > 0.0).astype(np.float64)
        if self.kind == "leaky_relu":
            return np.where(pre > 0.0, 1.0, self.alpha)
        return np.ones_like(pre)


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: dims h_0..h_L, per-layer rank caps r_i and spectral caps B_i."""

    layer_dims: tuple
    rank_caps: tuple
    spectral_caps: tuple
    activation: Activation

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        object.__setattr__(self, "rank_caps", tuple(int(r) for r in self.rank_caps))
        object.__setattr__(self, "spectral_caps", tuple(float(b) for b in self.spectral_caps))
        dims = self.layer_dims
        if len(dims) < 2:
            raise ValueError("need at least one layer (two entries in layer_dims)")
        if any(d < 1 for d in dims):
            raise ValueError(f"layer dims must be positive, got {dims}")
        depth = len(dims) - 1
        if len(self.rank_caps) != depth or len(self.spectral_caps) != depth:
            raise ValueError(
                f"rank_caps and spectral_caps must have {depth} entries, "
                f"got {len(self.rank_caps)} and {len(self.spectral_caps)}"
            )
        for i, (r, b) in enumerate(zip(self.rank_caps, self.spectral_caps)):
            limit = min(dims[i + 1], dims[i])
            if not 1 <= r <= limit:
                raise ValueError(f"rank cap {r} at layer {i + 1} outside [1, {limit}]")
            if not (np.isfinite(b) and b >= 0.0):
                raise ValueError(f"spectral cap at layer {i + 1} must be >= 0, got {b}")
        if not isinstance(self.activation, Activation):
            raise ValueError("activation must be an Activation")

    @property
    def depth(self):
        return len(self.layer_dims) - 1

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def constraint(self, layer):
        return ConstraintSet(rank=self.rank_caps[layer], spectral=self.spectral_caps[layer])

    def weight_shape(self, layer):
        return (self.layer_dims[layer + 1], self.layer_dims[layer])

    def prefix(self, length):
        """Spec for layers 1..length with the same caps and activation."""
        if not 1 <= length <= self.depth:
            raise ValueError(f"prefix length {length} outside [1, {self.depth}]")
        return NetworkSpec(
            layer_dims=self.layer_dims[: length + 1],
            rank_caps=self.rank_caps[:length],
            spectral_caps=self.spectral_caps[:length],
            activation=self.activation,
        )


@dataclass(frozen=True)
class DataSample:
    """Sample matrix X (rows are inputs) with cached maximum row norm."""

    x: np.ndarray
    max_norm: float

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        object.__setattr__(self, "x", x)
        recomputed = float(np.max(np.linalg.norm(x, axis=1)))
        if abs(recomputed - self.max_norm) > 1e-10:
            raise ValueError(
                f"cached max row norm {self.max_norm} disagrees with recomputed {recomputed}"
            )

    @classmethod
    def from_array(cls, x):
        arr = as_matrix(x, "x")
        return cls(x=arr, max_norm=float(np.max(np.linalg.norm(arr, axis=1))))

    @property
    def m(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def frobenius(self):
        return float(np.linalg.norm(self.x))


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer images of the data: pre[i] before activation, post[i] after."""

    pre: tuple
    post: tuple

    @property
    def outputs(self):
        return self.post[-1]


def check_weights(weights, spec):
    if len(weights) != spec.depth:
        raise ShapeMismatch(f"expected {spec.depth} weight matrices, got {len(weights)}")
    out = []
    for i, w in enumerate(weights):
        arr = as_matrix(w, f"weights[{i}]")
        expected = spec.weight_shape(i)
        if arr.shape != expected:
            raise ShapeMismatch(f"layer {i + 1}: weight shape {arr.shape}, expected {expected}")
        out.append(arr)
    return tuple(out)


def forward(weights, spec, data, activate_last=False):
    weights = check_weights(weights, spec)
    if data.dim != spec.input_dim:
        raise ShapeMismatch(f"layer 1: data dim {data.dim}, expected {spec.input_dim}")
    pre = []
    post = []
    z = data.x.T
    for i, w in enumerate(weights):
        z = w @ z
        pre.append(z)
        if i < spec.depth - 1 or activate_last:
            z = spec.activation.apply(z)
        post.append(z)
    return ForwardTrace(pre=tuple(pre), post=tuple(post))


def backpropagate(weights, spec, data, trace, output_grad, activate_last=False):
    """Per-layer gradients of a scalar whose derivative wrt the network output
    (the last post image) is `output_grad`."""
    weights = check_weights(weights, spec)
    delta = np.asarray(output_grad, dtype=np.float64)
    if delta.shape != trace.post[-1].shape:
        raise ShapeMismatch(
            f"output grad shape {delta.shape}, expected {trace.post[-1].shape}"
        )
    grads = [None] * spec.depth
    for i in range(spec.depth - 1, -1, -1):
        if i < spec.depth - 1 or activate_last:
            delta = delta * spec.activation.derivative(trace.pre[i])
        below = trace.post[i - 1] if i > 0 else data.x.T
        grads[i] = delta @ below.T
        if i > 0:
            delta = weights[i].T @ delta
    return grads


def _check_noise(noise, spec, data):
    g = as_matrix(noise, "noise")
    if g.shape != (spec.output_dim, data.m):
        raise ShapeMismatch(f"noise shape {g.shape}, expected {(spec.output_dim, data.m)}")
    return g


def gaussian_objective(weights, spec, data, noise):
    """(1/m) * entrywise inner product of the noise with the network outputs."""
    g = _check_noise(noise, spec, data)
    trace = forward(weights, spec, data)
    return float(np.sum(g * trace.outputs) / data.m)


def objective_gradient(weights, spec, data, noise):
    """Exact reverse-mode gradient of gaussian_objective wrt each weight matrix."""
    g = _check_noise(noise, spec, data)
    trace = forward(weights, spec, data)
    return backpropagate(weights, spec, data, trace, g / data.m)


def project_weights(weights, spec):
    weights = check_weights(weights, spec)
    return tuple(
        project_rank_spectral(w, spec.constraint(i)) for i, w in enumerate(weights)
    )


def random_weights(spec, rng):
    """Independent standard-normal entries per layer; callers project as needed."""
    return tuple(rng.normal(size=spec.weight_shape(i)) for i in range(spec.depth))


def network_to_json(spec, weights):
    weights = check_weights(weights, spec)
    return {
        "dims": list(spec.layer_dims),
        "rank_caps": list(spec.rank_caps),
        "spectral_caps": list(spec.spectral_caps),
        "activation": {"kind": spec.activation.kind, "alpha": spec.activation.alpha},
        "weights": [w.reshape(-1).tolist() for w in weights],
    }


def network_from_json(doc):
    if not isinstance(doc, dict):
        raise ValueError("network document must be a JSON object")
    required = {"dims", "rank_caps", "spectral_caps", "activation", "weights"}
    missing = required - set(doc)
    if missing:
        raise ValueError(f"network document missing keys: {sorted(missing)}")
    extra = set(doc) - required
    if extra:
        raise ValueError(f"network document has unknown keys: {sorted(extra)}")
    act = doc["activation"]
    if not isinstance(act, dict) or "kind" not in act:
        raise ValueError("activation must be an object with a 'kind'")
    unknown = set(act) - {"kind", "alpha"}
    if unknown:
        raise ValueError(f"activation has unknown keys: {sorted(unknown)}")
    spec = NetworkSpec(
        layer_dims=tuple(doc["dims"]),
        rank_caps=tuple(doc["rank_caps"]),
        spectral_caps=tuple(doc["spectral_caps"]),
        activation=Activation(kind=act["kind"], alpha=float(act.get("alpha", 0.01))),
    )
    flat = doc["weights"]
    if len(flat) != spec.depth:
        raise ValueError(f"expected {spec.depth} weight arrays, got {len(flat)}")
    weights = []
    for i, values in enumerate(flat):
        shape = spec.weight_shape(i)
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != shape[0] * shape[1]:
            raise ValueError(f"layer {i + 1}: {arr.size} entries, expected {shape[0] * shape[1]}")
        weights.append(arr.reshape(shape))
    return spec, tuple(weights)


def save_network(path, spec, weights):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_json(spec, weights), fh)


def load_network(path):
    with open(path, encoding="utf-8") as fh:
        return network_from_json(json.load(fh))
