"""Closed-form capacity bounds for rank- and spectral-norm-constrained networks.

All evaluators read from a single BoundInputs record holding per-layer norms,
ranks, widths, the sample geometry (m, max row norm R, data Frobenius norm),
and the tunable constants.  Inputs can be built from worst-case caps or from
measured weights.  Values are reported through BoundReport, which carries a
digest of the inputs so CSV rows are traceable to their configuration.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .linalg import (
    frobenius_norm,
    l21_norm_of_transpose,
    numerical_rank,
    singular_values,
)
from .network import DataSample, NetworkSpec
from .validation import as_matrix, as_real

_DIGEST_CHARS = 12
_CROSSOVER_DEPTH_LIMIT = 400.0


def _as_float_tuple(value, name, minimum=0.0):
    out = tuple(float(v) for v in value)
    for i, v in enumerate(out):
        if not np.isfinite(v) or v < minimum:
            raise ValueError(f"{name}[{i}] must be finite and >= {minimum}, got {v}")
    return out


def _as_int_tuple(value, name, minimum):
    out = tuple(int(v) for v in value)
    for i, v in enumerate(out):
        if v < minimum:
            raise ValueError(f"{name}[{i}] must be >= {minimum}, got {v}")
    return out


@dataclass(frozen=True)
class BoundInputs:
    """Per-layer norms and sample geometry feeding every bound evaluator.

    spectral, frobenius, l21: per-layer operator, Frobenius, and
    transpose-(2,1) norms (caps or measured values).  ranks and widths are
    per-layer; widths exclude the input dimension.  max_row_norm is the
    largest input row norm R; x_frobenius is the Frobenius norm of the
    m-row sample matrix.
    """

    spectral: tuple
    frobenius: tuple
    l21: tuple
    ranks: tuple
    widths: tuple
    m: int
    max_row_norm: float
    x_frobenius: float
    c1: float = 1.0
    c2: float = 1.0
    c_comp: float = 1.0
    delta: float = 0.05
    loss_lipschitz: float = 1.0
    activation_lipschitz: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "spectral", _as_float_tuple(self.spectral, "spectral"))
        object.__setattr__(self, "frobenius", _as_float_tuple(self.frobenius, "frobenius"))
        object.__setattr__(self, "l21", _as_float_tuple(self.l21, "l21"))
        object.__setattr__(self, "ranks", _as_int_tuple(self.ranks, "ranks", 0))
        object.__setattr__(self, "widths", _as_int_tuple(self.widths, "widths", 1))
        object.__setattr__(self, "m", int(self.m))
        depth = len(self.spectral)
        if depth < 1:
            raise ValueError("need at least one layer")
        for name in ("frobenius", "l21", "ranks", "widths"):
            if len(getattr(self, name)) != depth:
                raise ValueError(f"{name} must have {depth} entries, got {len(getattr(self, name))}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        object.__setattr__(self, "max_row_norm", as_real(self.max_row_norm, "max_row_norm", minimum=0.0))
        object.__setattr__(self, "x_frobenius", as_real(self.x_frobenius, "x_frobenius", minimum=0.0))
        for name in ("c1", "c2", "c_comp", "loss_lipschitz", "activation_lipschitz"):
            value = as_real(getattr(self, name), name)
            if value <= 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")
            object.__setattr__(self, name, value)
        delta = as_real(self.delta, "delta")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_caps(cls, spec, m, max_row_norm, x_frobenius=None, **constants):
        """Worst-case inputs from an architecture's caps: rank-r matrices in a
        spectral ball of radius B have Frobenius norm at most sqrt(r)*B and
        transpose-(2,1) norm at most sqrt(r*h)*B."""
        if not isinstance(spec, NetworkSpec):
            raise ValueError("spec must be a NetworkSpec")
        m = int(m)
        max_row_norm = as_real(max_row_norm, "max_row_norm", minimum=0.0)
        widths = spec.layer_dims[1:]
        caps = spec.spectral_caps
        ranks = spec.rank_caps
        return cls(
            spectral=caps,
            frobenius=tuple(np.sqrt(r) * b for r, b in zip(ranks, caps)),
            l21=tuple(np.sqrt(r * h) * b for r, h, b in zip(ranks, widths, caps)),
            ranks=ranks,
            widths=widths,
            m=m,
            max_row_norm=max_row_norm,
            x_frobenius=max_row_norm * np.sqrt(m) if x_frobenius is None else x_frobenius,
            **constants,
        )

    @classmethod
    def from_weights(cls, weights, data, rank_tol=1e-8, **constants):
        """Measured inputs: norms and numerical ranks of an actual weight set."""
        weights = [as_matrix(w, f"weights[{i}]") for i, w in enumerate(weights)]
        if not weights:
            raise ValueError("weights must be non-empty")
        for i in range(1, len(weights)):
            if weights[i].shape[1] != weights[i - 1].shape[0]:
                raise ValueError(
                    f"weights[{i}] input dim {weights[i].shape[1]} does not chain "
                    f"with weights[{i - 1}] output dim {weights[i - 1].shape[0]}"
                )
        if not isinstance(data, DataSample):
            data = DataSample.from_array(data)
        if data.dim != weights[0].shape[1]:
            raise ValueError(
                f"data dim {data.dim} does not match first layer input {weights[0].shape[1]}"
            )
        return cls(
            spectral=tuple(float(singular_values(w)[0]) for w in weights),
            frobenius=tuple(frobenius_norm(w) for w in weights),
            l21=tuple(l21_norm_of_transpose(w) for w in weights),
            ranks=tuple(numerical_rank(w, tol_rel=rank_tol) for w in weights),
            widths=tuple(w.shape[0] for w in weights),
            m=data.m,
            max_row_norm=data.max_norm,
            x_frobenius=data.frobenius,
            **constants,
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def depth(self):
        return len(self.spectral)

    @property
    def prod_spectral(self):
        return float(np.prod(self.spectral))

    @property
    def max_rank(self):
        return max(self.ranks)

    @property
    def max_width(self):
        return max(self.widths)

    @property
    def prefix_min_ranks(self):
        # running minimum of ranks over layers 1..i
        mins = []
        current = self.ranks[0]
        for r in self.ranks:
            current = min(current, r)
            mins.append(current)
        return tuple(mins)

    def constants_used(self):
        return {
            "c1": self.c1,
            "c2": self.c2,
            "c_comp": self.c_comp,
            "delta": self.delta,
            "loss_lipschitz": self.loss_lipschitz,
            "activation_lipschitz": self.activation_lipschitz,
            "table_leading_constant": 1.0,
        }

    def digest(self):
        payload = {
            "spectral": list(self.spectral),
            "frobenius": list(self.frobenius),
            "l21": list(self.l21),
            "ranks": list(self.ranks),
            "widths": list(self.widths),
            "m": self.m,
            "max_row_norm": self.max_row_norm,
            "x_frobenius": self.x_frobenius,
            "constants": self.constants_used(),
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:_DIGEST_CHARS]


def _check_layer(inputs, layer):
    if not 0 <= layer < inputs.depth:
        raise ValueError(f"layer {layer} outside [0, {inputs.depth - 1}]")


def bound_single_layer(inputs, layer):
    """Capacity of one constrained layer under a Lipschitz activation:
    L(phi) * R * sqrt(h * rank / m) * spectral."""
    _check_layer(inputs, layer)
    return (
        inputs.activation_lipschitz
        * inputs.max_row_norm
        * np.sqrt(inputs.widths[layer] * inputs.ranks[layer] / inputs.m)
        * inputs.spectral[layer]
    )


def bound_deep_linear(inputs):
    """Linear chain: R * sqrt(h_L * min_i rank_i / m) * prod spectral."""
    return (
        inputs.max_row_norm
        * np.sqrt(inputs.widths[-1] * min(inputs.ranks) / inputs.m)
        * inputs.prod_spectral
    )


def bound_diameter(inputs, length):
    """Output diameter of the depth-`length` prefix:
    ||X||_F * sqrt(2 * min rank) * 2 * prod spectral over the prefix."""
    if not 1 <= length <= inputs.depth:
        raise ValueError(f"prefix length {length} outside [1, {inputs.depth}]")
    return (
        inputs.x_frobenius
        * np.sqrt(2.0 * min(inputs.ranks[:length]))
        * 2.0
        * float(np.prod(inputs.spectral[:length]))
    )


def bound_r_term(inputs, layer):
    """Gaussian average of a layer's Lipschitz coefficients: ||W||_F * sqrt(h)."""
    _check_layer(inputs, layer)
    return inputs.frobenius[layer] * np.sqrt(inputs.widths[layer])


def bound_main_full(inputs):
    """Depth-L capacity with per-layer rank sensitivity.

    (||X||_F/m) * { F_1 sqrt(h_1) prod_{i>=2} c1 B_i
                    + sum_{i>=2} c1^(L-i) c2 2 sqrt(2 min-rank_i) kappa_i F_i sqrt(h_i) }
    where kappa_i multiplies every spectral norm except layer i's and the
    min-rank runs over layers up to i.  L=1 keeps only the first term.
    """
    depth = inputs.depth
    spectral = inputs.spectral
    first = inputs.frobenius[0] * np.sqrt(inputs.widths[0])
    for i in range(1, depth):
        first *= inputs.c1 * spectral[i]
    total = first
    mins = inputs.prefix_min_ranks
    for i in range(1, depth):
        kappa = float(np.prod(spectral[:i])) * float(np.prod(spectral[i + 1:]))
        total += (
            inputs.c1 ** (depth - 1 - i)
            * inputs.c2
            * 2.0
            * np.sqrt(2.0 * mins[i])
            * kappa
            * inputs.frobenius[i]
            * np.sqrt(inputs.widths[i])
        )
    return inputs.x_frobenius / inputs.m * total


def bound_main_simplified(inputs):
    """Coarse form of the depth-L capacity: c1^L prod(B) R L r sqrt(h/m)
    with r the largest rank and h the largest width."""
    return (
        inputs.c1 ** inputs.depth
        * inputs.prod_spectral
        * inputs.max_row_norm
        * inputs.depth
        * inputs.max_rank
        * np.sqrt(inputs.max_width / inputs.m)
    )


def bound_golowich(inputs):
    """Depth-sqrt Frobenius product form: sqrt(L) prod ||W_i||_F / sqrt(m)."""
    return np.sqrt(inputs.depth) * float(np.prod(inputs.frobenius)) / np.sqrt(inputs.m)


def bound_neyshabur(inputs):
    """Spectral product with Frobenius stable-rank sum:
    prod ||W_i||_2 * sqrt(L^2 h sum(F_i^2/B_i^2) / m)."""
    prod = inputs.prod_spectral
    if prod == 0.0:
        return 0.0
    ratio_sum = sum((f / b) ** 2 for f, b in zip(inputs.frobenius, inputs.spectral))
    return prod * np.sqrt(inputs.depth**2 * inputs.max_width * ratio_sum / inputs.m)


def bound_bartlett(inputs):
    """Spectral product with (2,1)-norm ratios:
    prod ||W_i||_2 * (sum (l21_i/B_i)^(2/3))^(3/2) / sqrt(m)."""
    prod = inputs.prod_spectral
    if prod == 0.0:
        return 0.0
    ratio_sum = sum((v / b) ** (2.0 / 3.0) for v, b in zip(inputs.l21, inputs.spectral))
    return prod * ratio_sum**1.5 / np.sqrt(inputs.m)


def assemble_generalization_bound(est_or_bound, inputs, scalar_class=False):
    """Additive complexity-plus-confidence term on top of empirical risk.

    Vector-output route multiplies by sqrt(loss_lipschitz * pi); the
    scalar-class route (loss folded into the class) uses sqrt(2 pi).  Both
    share the tail sqrt(9 log(2/delta) / (2m)).
    """
    value = as_real(est_or_bound, "est_or_bound")
    if scalar_class:
        multiplier = np.sqrt(2.0 * np.pi)
    else:
        multiplier = np.sqrt(inputs.loss_lipschitz * np.pi)
    tail = np.sqrt(9.0 * np.log(2.0 / inputs.delta) / (2.0 * inputs.m))
    return multiplier * value + tail


def bound_collapse(inputs, bottom_complexity, bottleneck_layer=None):
    """Capacity after collapsing everything above a rank<=1 layer into one
    Lipschitz map: c * lip * (R/sqrt(m) + log(m)^(3/2) * bottom_complexity).

    lip is the product of spectral norms strictly above the bottleneck; the
    bottleneck defaults to the first layer whose rank is <= 1.
    """
    bottom = as_real(bottom_complexity, "bottom_complexity", minimum=0.0)
    if inputs.m < 2:
        raise ValueError(f"m must be >= 2 for the log factor, got {inputs.m}")
    if bottleneck_layer is None:
        candidates = [i for i, r in enumerate(inputs.ranks) if r <= 1]
        if not candidates:
            raise ValueError("no rank<=1 layer to collapse above; pass bottleneck_layer")
        bottleneck_layer = candidates[0]
    _check_layer(inputs, bottleneck_layer)
    lip = float(np.prod(inputs.spectral[bottleneck_layer + 1:]))
    return inputs.c_comp * lip * (
        inputs.max_row_norm / np.sqrt(inputs.m)
        + np.log(inputs.m) ** 1.5 * bottom
    )


def crossover_root(rank, width):
    """Depth at which the Frobenius-product bound overtakes the simplified
    rank bound: solves sqrt(L) r^(L/2) = L r sqrt(h) for L.

    Raises ValueError when no crossover exists (rank 1: the left side never
    catches up).
    """
    rank = int(rank)
    width = int(width)
    if rank < 1 or width < 1:
        raise ValueError("rank and width must be >= 1")

    def gap(depth):
        # log of LHS/RHS; sign change marks the crossover
        return (
            0.5 * np.log(depth)
            + 0.5 * depth * np.log(rank)
            - np.log(depth)
            - np.log(rank)
            - 0.5 * np.log(width)
        )

    if gap(_CROSSOVER_DEPTH_LIMIT) <= 0.0:
        raise ValueError(
            f"no crossover for rank={rank}, width={width} up to depth {_CROSSOVER_DEPTH_LIMIT}"
        )
    if gap(1.0) >= 0.0:
        return 1.0
    return float(brentq(gap, 1.0, _CROSSOVER_DEPTH_LIMIT, xtol=1e-9))


@dataclass(frozen=True)
class BoundReport:
    """Named bound values with the constants and a digest of the inputs."""

    values: dict
    constants: dict
    inputs_digest: str
    inputs: BoundInputs

    def __post_init__(self):
        for name, value in self.values.items():
            if not (np.isfinite(value) and value >= 0.0):
                raise ValueError(f"bound {name} must be finite and >= 0, got {value}")

    def to_dict(self):
        return {
            "values": {k: float(v) for k, v in self.values.items()},
            "constants_used": dict(self.constants),
            "inputs_digest": self.inputs_digest,
        }

    def to_csv_rows(self):
        """Fixed-order tabular layout; one row per bound.

        The normalized column divides out prod(B) * R so rows can be compared
        on scaling alone.
        """
        columns = [
            "bound",
            "value",
            "normalized_value",
            "c1",
            "c2",
            "c_comp",
            "delta",
            "loss_lipschitz",
            "activation_lipschitz",
            "depth",
            "m",
            "r_max",
            "h_max",
            "prod_spectral",
            "max_row_norm",
            "inputs_digest",
        ]
        inputs = self.inputs
        scale = inputs.prod_spectral * inputs.max_row_norm
        rows = []
        for name, value in self.values.items():
            normalized = value / scale if scale > 0.0 else float("nan")
            rows.append([
                name,
                float(value),
                normalized,
                inputs.c1,
                inputs.c2,
                inputs.c_comp,
                inputs.delta,
                inputs.loss_lipschitz,
                inputs.activation_lipschitz,
                inputs.depth,
                inputs.m,
                inputs.max_rank,
                inputs.max_width,
                inputs.prod_spectral,
                inputs.max_row_norm,
                self.inputs_digest,
            ])
        return columns, rows


def build_report(inputs, bottom_complexity=None, bottleneck_layer=None):
    """Evaluate every bound on one BoundInputs record.

    The collapse entry appears only when a bottom-prefix complexity value is
    supplied.
    """
    values = {
        "main_full": bound_main_full(inputs),
        "main_simplified": bound_main_simplified(inputs),
        "deep_linear": bound_deep_linear(inputs),
        "diameter": bound_diameter(inputs, inputs.depth),
        "single_layer": bound_single_layer(inputs, 0),
        "golowich": bound_golowich(inputs),
        "neyshabur": bound_neyshabur(inputs),
        "bartlett": bound_bartlett(inputs),
    }
    for layer in range(inputs.depth):
        values[f"r_term_{layer + 1}"] = bound_r_term(inputs, layer)
    if bottom_complexity is not None:
        values["collapse"] = bound_collapse(
            inputs, bottom_complexity, bottleneck_layer=bottleneck_layer
        )
    return BoundReport(
        values=values,
        constants=inputs.constants_used(),
        inputs_digest=inputs.digest(),
        inputs=inputs,
    )
