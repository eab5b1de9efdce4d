"""Config-driven experiment runners with deterministic CSV/JSON emission.

Every runner is a pure function of its config dict (seeds included): reruns
produce bit-identical files regardless of the worker-thread setting.  Configs
are strict JSON documents; unknown or missing keys fail with the offending
field path.  Every CSV row carries the constants tuple and the config digest.
"""

import csv
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundInputs,
    bound_bartlett,
    bound_diameter,
    bound_collapse,
    bound_golowich,
    bound_main_full,
    bound_main_simplified,
    bound_neyshabur,
    bound_single_layer,
    build_report,
    crossover_root,
    assemble_generalization_bound,
)
from .complexity import (
    ROLE_NOISE,
    ROLE_SPECGEN,
    ComplexityEstimate,
    OptimizerConfig,
    default_optimizer_config,
    estimate_diameter,
    estimate_gaussian_complexity,
    estimate_rademacher_complexity,
    norm_based_complexity_linear,
    single_layer_exact_sup,
    stream,
)
from .data import TASKS, gen_synthetic
from .network import Activation, ACTIVATION_KINDS, NetworkSpec, load_network
from .training import TrainConfig, mean_loss, train_projected_sgd

KINDS = (
    "estimate",
    "bound_table",
    "rank_sweep",
    "depth_sweep",
    "counterexample",
    "diameter_check",
    "collapse",
    "gap",
)

_DIGEST_CHARS = 12
_FLOAT_FORMAT = "%.17g"


class ConfigError(ValueError):
    """Malformed experiment config; the message names the field path."""


def _fail(path, message):
    raise ConfigError(f"{path}: {message}")


def _check_keys(section, allowed, path):
    if not isinstance(section, dict):
        _fail(path, f"expected an object, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            _fail(f"{path}.{key}", "unknown key")


def _need(section, key, path):
    if key not in section:
        _fail(f"{path}.{key}", "missing required key")
    return section[key]


def _as_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return value


def _as_number(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        _fail(path, f"must be finite, got {value}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return value


def _as_str(value, path, choices=None):
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {value!r}")
    if choices is not None and value not in choices:
        _fail(path, f"must be one of {sorted(choices)}, got {value!r}")
    return value


def _as_bool(value, path):
    if not isinstance(value, bool):
        _fail(path, f"expected true/false, got {value!r}")
    return value


def _as_int_list(value, path, minimum=1):
    if not isinstance(value, list) or not value:
        _fail(path, f"expected a non-empty list, got {value!r}")
    return [_as_int(v, f"{path}[{i}]", minimum=minimum) for i, v in enumerate(value)]


def parse_network(section, path="network"):
    _check_keys(section, {"dims", "rank_caps", "spectral_caps", "activation"}, path)
    dims = _as_int_list(_need(section, "dims", path), f"{path}.dims")
    ranks = _as_int_list(_need(section, "rank_caps", path), f"{path}.rank_caps")
    caps_raw = _need(section, "spectral_caps", path)
    if not isinstance(caps_raw, list) or not caps_raw:
        _fail(f"{path}.spectral_caps", f"expected a non-empty list, got {caps_raw!r}")
    caps = [
        _as_number(v, f"{path}.spectral_caps[{i}]", minimum=0.0)
        for i, v in enumerate(caps_raw)
    ]
    act_section = section.get("activation", {"kind": "relu"})
    _check_keys(act_section, {"kind", "alpha"}, f"{path}.activation")
    kind = _as_str(_need(act_section, "kind", f"{path}.activation"),
                   f"{path}.activation.kind", choices=set(ACTIVATION_KINDS))
    alpha = _as_number(act_section.get("alpha", 0.01), f"{path}.activation.alpha")
    try:
        return NetworkSpec(tuple(dims), tuple(ranks), tuple(caps), Activation(kind, alpha))
    except ValueError as err:
        _fail(path, str(err))


@dataclass(frozen=True)
class DataParams:
    m: int
    dim: int
    max_norm: float
    seed: int
    task: str

    def generate(self, dim=None, seed_offset=0):
        return gen_synthetic(
            self.m,
            self.dim if dim is None else dim,
            self.max_norm,
            self.seed + seed_offset,
            self.task,
        )


def parse_data(section, path="data", need_dim=True):
    allowed = {"m", "dim", "max_norm", "seed", "task"}
    if not need_dim:
        allowed = allowed - {"dim"}
    _check_keys(section, allowed, path)
    dim = _as_int(_need(section, "dim", path), f"{path}.dim", minimum=1) if need_dim else 0
    return DataParams(
        m=_as_int(_need(section, "m", path), f"{path}.m", minimum=1),
        dim=dim,
        max_norm=_as_number(_need(section, "max_norm", path), f"{path}.max_norm", minimum=0.0),
        seed=_as_int(_need(section, "seed", path), f"{path}.seed"),
        task=_as_str(section.get("task", "gaussian_blobs"), f"{path}.task", choices=set(TASKS)),
    )


def parse_optimizer(section, path="optimizer"):
    _check_keys(section, {"step_size", "iterations", "restarts", "seed"}, path)
    try:
        return OptimizerConfig(
            step_size=_as_number(_need(section, "step_size", path), f"{path}.step_size"),
            iterations=_as_int(_need(section, "iterations", path), f"{path}.iterations", minimum=1),
            restarts=_as_int(_need(section, "restarts", path), f"{path}.restarts", minimum=1),
            seed=_as_int(_need(section, "seed", path), f"{path}.seed"),
        )
    except ConfigError:
        raise
    except ValueError as err:
        _fail(path, str(err))


_CONSTANT_FIELDS = {"c1", "c2", "c_comp", "delta", "loss_lipschitz"}


def parse_constants(section, path="constants"):
    _check_keys(section, _CONSTANT_FIELDS, path)
    out = {"c1": 1.0, "c2": 1.0, "c_comp": 1.0, "delta": 0.05, "loss_lipschitz": 1.0}
    for key in sorted(section):
        out[key] = _as_number(section[key], f"{path}.{key}")
    if not 0.0 < out["delta"] < 1.0:
        _fail(f"{path}.delta", f"must be in (0, 1), got {out['delta']}")
    for key in ("c1", "c2", "c_comp", "loss_lipschitz"):
        if out[key] <= 0.0:
            _fail(f"{path}.{key}", f"must be > 0, got {out[key]}")
    return out


def parse_train(section, path="train"):
    _check_keys(section, {"epochs", "learning_rate", "batch_size", "label_noise", "loss"}, path)
    try:
        return TrainConfig(
            epochs=_as_int(_need(section, "epochs", path), f"{path}.epochs", minimum=0),
            learning_rate=_as_number(_need(section, "learning_rate", path), f"{path}.learning_rate"),
            batch_size=_as_int(_need(section, "batch_size", path), f"{path}.batch_size", minimum=1),
            seed=0,
            label_noise=_as_number(section.get("label_noise", 0.0), f"{path}.label_noise"),
            loss=_as_str(section.get("loss", "margin"), f"{path}.loss"),
        )
    except ConfigError:
        raise
    except ValueError as err:
        _fail(path, str(err))


def config_digest(config):
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:_DIGEST_CHARS]


@dataclass(frozen=True)
class RunResult:
    kind: str
    columns: tuple
    rows: tuple
    summary: dict
    diagnostics: dict
    digest: str

    def summary_line(self):
        parts = [f"{k}={v}" for k, v in self.summary.items()]
        return f"{self.kind}: rows={len(self.rows)} " + " ".join(parts)


def _constants_columns():
    return ["c1", "c2", "c_comp", "delta", "loss_lipschitz", "config_digest"]


def _constants_cells(constants, digest):
    return [
        constants["c1"],
        constants["c2"],
        constants["c_comp"],
        constants["delta"],
        constants["loss_lipschitz"],
        digest,
    ]


def _resolve_optimizer(config, spec, path="optimizer"):
    if "optimizer" in config:
        return parse_optimizer(config["optimizer"], path)
    return default_optimizer_config(spec)


_COMMON_KEYS = {"kind", "data", "optimizer", "constants", "output"}


def _parse_common(config, *, need_network=True, need_dim=True, need_draws=True, extra_keys=()):
    allowed = _COMMON_KEYS | set(extra_keys)
    if need_network:
        allowed = allowed | {"network"}
    if need_draws:
        allowed = allowed | {"n_draws"}
    _check_keys(config, allowed, "config")
    kind = _as_str(_need(config, "kind", "config"), "config.kind", choices=set(KINDS))
    spec = parse_network(_need(config, "network", "config")) if need_network else None
    data = parse_data(_need(config, "data", "config"), need_dim=need_dim)
    constants = parse_constants(config.get("constants", {}))
    n_draws = None
    if need_draws:
        n_draws = _as_int(_need(config, "n_draws", "config"), "config.n_draws", minimum=1)
    return kind, spec, data, constants, n_draws


def _spawn_seed(seed, index, slot):
    # derived scalar seeds for per-index data/training streams
    return int(stream(seed, ROLE_SPECGEN, index, slot).integers(2**62))


def _estimate_inputs(spec, data, constants):
    return BoundInputs.from_caps(
        spec,
        m=data.m,
        max_row_norm=data.max_norm,
        x_frobenius=data.frobenius,
        **constants,
    )


def run_estimate(config):
    """Monte Carlo complexity estimate of one constrained network class."""
    kind, spec, data_params, constants, n_draws = _parse_common(
        config, extra_keys={"noise", "trailing_activation"}
    )
    noise = _as_str(config.get("noise", "gaussian"), "config.noise",
                    choices={"gaussian", "rademacher"})
    trailing = _as_bool(config.get("trailing_activation", False), "config.trailing_activation")
    if data_params.dim != spec.input_dim:
        _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
    data, _ = data_params.generate()
    optimizer = _resolve_optimizer(config, spec)
    estimator = (
        estimate_gaussian_complexity if noise == "gaussian" else estimate_rademacher_complexity
    )
    estimate = estimator(spec, data, optimizer, n_draws, trailing_activation=trailing)
    digest = config_digest(config)
    columns = ["draw", "value"] + _constants_columns()
    rows = [
        [t, value] + _constants_cells(constants, digest)
        for t, value in enumerate(estimate.per_draw)
    ]
    summary = {
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "n_draws": estimate.n_draws,
        "noise": noise,
    }
    return RunResult(kind, tuple(columns), _freeze(rows), summary,
                     {"estimate": estimate.to_dict()}, digest)


def run_bound_table(config):
    """Every closed-form bound for one network: caps or measured weights."""
    kind, spec, data_params, constants, _ = _parse_common(
        config, need_draws=False, extra_keys={"network_file"}
    )
    data, _ = data_params.generate()
    if "network_file" in config:
        path = _as_str(config["network_file"], "config.network_file")
        if not os.path.exists(path):
            _fail("config.network_file", f"file not found: {path}")
        spec, weights = load_network(path)
        if data_params.dim != spec.input_dim:
            _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
        inputs = BoundInputs.from_weights(weights, data, **constants)
        mode = "measured"
    else:
        if data_params.dim != spec.input_dim:
            _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
        inputs = _estimate_inputs(spec, data, constants)
        mode = "caps"
    report = build_report(inputs)
    digest = config_digest(config)
    report_columns, report_rows = report.to_csv_rows()
    columns = report_columns + ["config_digest"]
    rows = [row + [digest] for row in report_rows]
    summary = {"mode": mode, "bounds": len(report.values)}
    return RunResult(kind, tuple(columns), _freeze(rows), summary,
                     {"report": report.to_dict()}, digest)


def run_rank_sweep(config):
    """Single-layer complexity vs rank cap: MC estimate, closed bound, ratio,
    and the log-log scaling slope."""
    kind, spec, data_params, constants, n_draws = _parse_common(
        config, extra_keys={"ranks"}
    )
    if spec.depth != 1:
        _fail("config.network.dims", f"rank sweep needs a single layer, got depth {spec.depth}")
    if data_params.dim != spec.input_dim:
        _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
    full = min(spec.input_dim, spec.output_dim)
    if "ranks" in config:
        ranks = _as_int_list(config["ranks"], "config.ranks")
        for i, r in enumerate(ranks):
            if r > full:
                _fail(f"config.ranks[{i}]", f"exceeds full rank {full}")
    else:
        ranks = []
        r = 1
        while r < full:
            ranks.append(r)
            r *= 2
        ranks.append(full)
    data, _ = data_params.generate()
    optimizer = _resolve_optimizer(config, spec)
    digest = config_digest(config)

    columns = ["rank", "estimate", "std_error", "bound", "ratio"] + _constants_columns()
    rows = []
    estimates = []
    for r in ranks:
        spec_r = NetworkSpec(
            spec.layer_dims, (r,), spec.spectral_caps, spec.activation
        )
        est = estimate_gaussian_complexity(spec_r, data, optimizer, n_draws)
        inputs = _estimate_inputs(spec_r, data, constants)
        bound = bound_single_layer(inputs, 0)
        ratio = est.mean / bound if bound > 0 else float("inf")
        estimates.append(est)
        rows.append([r, est.mean, est.std_error, bound, ratio]
                    + _constants_cells(constants, digest))
    slope, intercept = _loglog_slope(ranks, [e.mean for e in estimates])
    summary = {
        "slope": slope,
        "ranks": len(ranks),
        "dominated_rows": sum(1 for row in rows if row[1] <= row[3]),
    }
    diagnostics = {
        "slope": slope,
        "intercept": intercept,
        "per_rank": {str(r): e.to_dict() for r, e in zip(ranks, estimates)},
    }
    return RunResult(kind, tuple(columns), _freeze(rows), summary, diagnostics, digest)


def _loglog_slope(xs, ys):
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ys = np.asarray(ys, dtype=np.float64)
    if np.any(ys <= 0.0):
        return float("nan"), float("nan")
    ys = np.log(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def run_depth_sweep(config):
    """Bound scalings vs depth at fixed rank/width with unit caps, plus the
    crossover depth where the Frobenius-product bound overtakes the
    simplified rank bound."""
    kind, _, data_params, constants, n_draws = _parse_common(
        config, need_network=False, need_dim=False,
        extra_keys={"depth_max", "rank", "width"},
    )
    depth_max = _as_int(_need(config, "depth_max", "config"), "config.depth_max", minimum=1)
    rank = _as_int(_need(config, "rank", "config"), "config.rank", minimum=1)
    width = _as_int(_need(config, "width", "config"), "config.width", minimum=1)
    if rank > width:
        _fail("config.rank", f"exceeds width {width}")
    data, _ = data_params.generate(dim=width)
    digest = config_digest(config)

    columns = [
        "depth", "main_simplified", "golowich", "neyshabur", "bartlett",
        "mc_estimate", "mc_std_error",
    ] + _constants_columns()
    rows = []
    exceeds = []
    for depth in range(1, depth_max + 1):
        spec = NetworkSpec(
            (width,) * (depth + 1), (rank,) * depth, (1.0,) * depth, Activation("relu")
        )
        optimizer = _resolve_optimizer(config, spec)
        est = estimate_gaussian_complexity(spec, data, optimizer, n_draws)
        inputs = _estimate_inputs(spec, data, constants)
        simplified = bound_main_simplified(inputs)
        golowich = bound_golowich(inputs)
        rows.append([
            depth, simplified, golowich,
            bound_neyshabur(inputs), bound_bartlett(inputs),
            est.mean, est.std_error,
        ] + _constants_cells(constants, digest))
        exceeds.append(bool(golowich > simplified))
    crossover = _crossover_depth(exceeds)
    try:
        root = crossover_root(rank, width)
    except ValueError:
        root = None
    summary = {"crossover_depth": crossover, "analytic_root": root}
    diagnostics = {"exceeds": exceeds, "analytic_root": root}
    return RunResult(kind, tuple(columns), _freeze(rows), summary, diagnostics, digest)


def _crossover_depth(exceeds):
    """Smallest depth index (1-based) from which every later value exceeds."""
    crossover = None
    for i, flag in enumerate(exceeds):
        if flag and crossover is None:
            crossover = i + 1
        elif not flag:
            crossover = None
    return crossover


def run_counterexample(config):
    """Rank insensitivity of the norm-based definition vs rank sensitivity of
    the per-coordinate definition, on rank-1 and full-rank linear classes."""
    kind, spec, data_params, constants, n_draws = _parse_common(config)
    if spec.depth != 1:
        _fail("config.network.dims", f"counterexample needs a single layer, got depth {spec.depth}")
    if data_params.dim != spec.input_dim:
        _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
    data, _ = data_params.generate()
    cap = spec.spectral_caps[0]
    h = spec.output_dim
    full = min(spec.input_dim, h)
    seed = _resolve_optimizer(config, spec).seed
    digest = config_digest(config)

    norm_low = norm_based_complexity_linear(data, cap, 1, n_draws, seed)
    norm_full = norm_based_complexity_linear(data, cap, full, n_draws, seed)
    vector = {}
    for label, r in (("rank_1", 1), ("full_rank", full)):
        values = []
        for t in range(n_draws):
            noise = stream(seed, ROLE_NOISE, t).standard_normal((h, data.m))
            values.append(single_layer_exact_sup(noise, data, _constraint(r, cap)))
        vector[label] = ComplexityEstimate.from_values(values, {})

    columns = [
        "class", "norm_based", "norm_based_std_error",
        "vector_valued", "vector_valued_std_error",
    ] + _constants_columns()
    rows = [
        ["rank_1", norm_low.mean, norm_low.std_error,
         vector["rank_1"].mean, vector["rank_1"].std_error]
        + _constants_cells(constants, digest),
        ["full_rank", norm_full.mean, norm_full.std_error,
         vector["full_rank"].mean, vector["full_rank"].std_error]
        + _constants_cells(constants, digest),
    ]
    identical = norm_low.per_draw == norm_full.per_draw
    ratio = (
        vector["full_rank"].mean / vector["rank_1"].mean
        if vector["rank_1"].mean > 0 else float("inf")
    )
    limit = cap * data.max_norm / np.sqrt(data.m)
    summary = {
        "norm_based_identical": identical,
        "vector_ratio": ratio,
        "sqrt_dim": float(np.sqrt(full)),
        "norm_based_limit": limit,
    }
    diagnostics = {
        "norm_based": {"rank_1": norm_low.to_dict(), "full_rank": norm_full.to_dict()},
        "vector_valued": {k: v.to_dict() for k, v in vector.items()},
    }
    return RunResult(kind, tuple(columns), _freeze(rows), summary, diagnostics, digest)


def _constraint(rank, cap):
    from .linalg import ConstraintSet

    return ConstraintSet(rank, cap)


def run_diameter_check(config):
    """Empirical output diameter vs its closed-form cap on random specs."""
    kind, _, data_params, constants, _ = _parse_common(
        config, need_network=False, need_dim=False, need_draws=False,
        extra_keys={"n_specs", "depth_max", "width_max", "spec_seed"},
    )
    n_specs = _as_int(_need(config, "n_specs", "config"), "config.n_specs", minimum=1)
    depth_max = _as_int(config.get("depth_max", 4), "config.depth_max", minimum=1)
    width_max = _as_int(config.get("width_max", 32), "config.width_max", minimum=2)
    spec_seed = _as_int(config.get("spec_seed", 0), "config.spec_seed")
    base_optimizer = (
        parse_optimizer(config["optimizer"]) if "optimizer" in config
        else OptimizerConfig(step_size=0.1, iterations=150, restarts=3, seed=0)
    )
    digest = config_digest(config)

    columns = ["spec_index", "depth", "dims", "estimate", "bound", "dominated"] \
        + _constants_columns()
    rows = []
    violations = 0
    for i in range(n_specs):
        spec = _random_spec(spec_seed, i, depth_max, width_max)
        data, _ = data_params.generate(dim=spec.input_dim, seed_offset=i)
        optimizer = dataclasses.replace(base_optimizer, seed=_spawn_seed(spec_seed, i, 1))
        estimate = estimate_diameter(spec, data, optimizer)
        inputs = _estimate_inputs(spec, data, constants)
        bound = bound_diameter(inputs, spec.depth)
        dominated = estimate <= bound + 1e-9
        if not dominated:
            violations += 1
        rows.append([
            i, spec.depth, "x".join(str(d) for d in spec.layer_dims),
            estimate, bound, int(dominated),
        ] + _constants_cells(constants, digest))
    summary = {"specs": n_specs, "violations": violations}
    return RunResult(kind, tuple(columns), _freeze(rows), summary,
                     {"violations": violations}, digest)


def _random_spec(seed, index, depth_max, width_max):
    rng = stream(seed, ROLE_SPECGEN, index, 0)
    depth = int(rng.integers(1, depth_max + 1))
    dims = tuple(int(rng.integers(2, width_max + 1)) for _ in range(depth + 1))
    ranks = tuple(
        int(rng.integers(1, min(dims[i], dims[i + 1]) + 1)) for i in range(depth)
    )
    caps = tuple(float(rng.uniform(0.3, 2.0)) for _ in range(depth))
    return NetworkSpec(dims, ranks, caps, Activation("relu"))


def run_collapse(config):
    """Twin networks differing only in one layer's rank cap (1 vs full):
    closed bounds, MC estimates, and the composition bound built from the
    bottom prefix's Rademacher estimate."""
    kind, _, data_params, constants, n_draws = _parse_common(
        config, need_network=False, need_dim=False,
        extra_keys={"n_configs", "config_seed", "depth_max", "width_max"},
    )
    n_configs = _as_int(_need(config, "n_configs", "config"), "config.n_configs", minimum=1)
    config_seed = _as_int(config.get("config_seed", 0), "config.config_seed")
    depth_max = _as_int(config.get("depth_max", 4), "config.depth_max", minimum=2)
    width_max = _as_int(config.get("width_max", 24), "config.width_max", minimum=2)
    base_optimizer = (
        parse_optimizer(config["optimizer"]) if "optimizer" in config
        else OptimizerConfig(step_size=0.1, iterations=200, restarts=4, seed=0)
    )
    digest = config_digest(config)

    columns = [
        "config_index", "depth", "dims", "bottleneck_layer",
        "bound_full", "bound_bottleneck",
        "mc_full", "mc_full_std_error", "mc_bottleneck", "mc_bottleneck_std_error",
        "prefix_rademacher", "collapse_bound", "prefix_min_ranks",
    ] + _constants_columns()
    rows = []
    bound_violations = 0
    mc_violations = 0
    for i in range(n_configs):
        rng = stream(config_seed, ROLE_SPECGEN, i, 0)
        depth = int(rng.integers(2, depth_max + 1))
        dims = tuple(int(rng.integers(3, width_max + 1)) for _ in range(depth + 1))
        caps = tuple(float(rng.uniform(0.5, 1.5)) for _ in range(depth))
        bottleneck = int(rng.integers(0, depth))
        full_ranks = []
        for layer in range(depth):
            limit = min(dims[layer], dims[layer + 1])
            full_ranks.append(int(rng.integers(1, limit + 1)))
        ranks_full = list(full_ranks)
        ranks_full[bottleneck] = min(dims[bottleneck], dims[bottleneck + 1])
        ranks_bottleneck = list(full_ranks)
        ranks_bottleneck[bottleneck] = 1
        spec_full = NetworkSpec(dims, tuple(ranks_full), caps, Activation("relu"))
        spec_bottleneck = NetworkSpec(dims, tuple(ranks_bottleneck), caps, Activation("relu"))

        data, _ = data_params.generate(dim=dims[0], seed_offset=i)
        optimizer = dataclasses.replace(base_optimizer, seed=_spawn_seed(config_seed, i, 1))
        est_full = estimate_gaussian_complexity(spec_full, data, optimizer, n_draws)
        est_bottleneck = estimate_gaussian_complexity(spec_bottleneck, data, optimizer, n_draws)
        prefix_spec = spec_bottleneck.prefix(bottleneck + 1)
        prefix_est = estimate_rademacher_complexity(prefix_spec, data, optimizer, n_draws)

        inputs_full = _estimate_inputs(spec_full, data, constants)
        inputs_bottleneck = _estimate_inputs(spec_bottleneck, data, constants)
        b_full = bound_main_full(inputs_full)
        b_bottleneck = bound_main_full(inputs_bottleneck)
        collapse_value = bound_collapse(
            inputs_bottleneck, prefix_est.mean, bottleneck_layer=bottleneck
        )
        if b_bottleneck > b_full + 1e-12:
            bound_violations += 1
        sigma = np.hypot(est_full.std_error, est_bottleneck.std_error)
        if est_bottleneck.mean > est_full.mean + 2.0 * sigma:
            mc_violations += 1
        rows.append([
            i, depth, "x".join(str(d) for d in dims), bottleneck,
            b_full, b_bottleneck,
            est_full.mean, est_full.std_error,
            est_bottleneck.mean, est_bottleneck.std_error,
            prefix_est.mean, collapse_value,
            ";".join(str(r) for r in inputs_bottleneck.prefix_min_ranks),
        ] + _constants_cells(constants, digest))
    summary = {
        "configs": n_configs,
        "bound_violations": bound_violations,
        "mc_violations": mc_violations,
    }
    return RunResult(kind, tuple(columns), _freeze(rows), summary,
                     {"bound_violations": bound_violations, "mc_violations": mc_violations},
                     digest)


def run_gap(config):
    """Train/test gap of projected-SGD networks vs the assembled bound built
    from the class's MC complexity estimate, plus every closed bound on the
    trained weights' measured norms."""
    kind, spec, data_params, constants, n_draws = _parse_common(
        config, extra_keys={"train", "n_seeds"}
    )
    if data_params.dim != spec.input_dim:
        _fail("config.data.dim", f"must equal network input dim {spec.input_dim}")
    if spec.output_dim != 1:
        _fail("config.network.dims", "gap experiment needs scalar network output")
    train_template = parse_train(_need(config, "train", "config"))
    n_seeds = _as_int(config.get("n_seeds", 20), "config.n_seeds", minimum=1)
    base_optimizer = _resolve_optimizer(config, spec)
    digest = config_digest(config)

    columns = [
        "seed_index", "train_loss", "test_loss", "gap",
        "estimate", "estimate_std_error", "assembled_bound", "sound",
        "main_full", "main_simplified", "golowich", "neyshabur", "bartlett",
        "max_measured_rank",
    ] + _constants_columns()
    rows = []
    sound_count = 0
    for i in range(n_seeds):
        train_data, train_labels = data_params.generate(seed_offset=2 * i)
        test_data, test_labels = data_params.generate(seed_offset=2 * i + 1)
        tc = dataclasses.replace(train_template, seed=_spawn_seed(data_params.seed, i, 2))
        result = train_projected_sgd(spec, train_data, train_labels, tc)
        train_loss = mean_loss(result.weights, spec, train_data, train_labels, "clipped_margin")
        test_loss = mean_loss(result.weights, spec, test_data, test_labels, "clipped_margin")
        gap = test_loss - train_loss

        optimizer = dataclasses.replace(base_optimizer, seed=_spawn_seed(base_optimizer.seed, i, 3))
        estimate = estimate_gaussian_complexity(spec, train_data, optimizer, n_draws)
        class_inputs = _estimate_inputs(spec, train_data, constants)
        assembled = assemble_generalization_bound(
            estimate.mean + 3.0 * estimate.std_error, class_inputs, scalar_class=True
        )
        sound = gap <= assembled
        if sound:
            sound_count += 1

        measured = BoundInputs.from_weights(result.weights, train_data, **constants)
        rows.append([
            i, train_loss, test_loss, gap,
            estimate.mean, estimate.std_error, assembled, int(sound),
            bound_main_full(measured), bound_main_simplified(measured),
            bound_golowich(measured), bound_neyshabur(measured), bound_bartlett(measured),
            max(measured.ranks),
        ] + _constants_cells(constants, digest))
    summary = {"seeds": n_seeds, "sound_fraction": sound_count / n_seeds}
    return RunResult(kind, tuple(columns), _freeze(rows), summary,
                     {"sound_count": sound_count}, digest)


_RUNNERS = {
    "estimate": run_estimate,
    "bound_table": run_bound_table,
    "rank_sweep": run_rank_sweep,
    "depth_sweep": run_depth_sweep,
    "counterexample": run_counterexample,
    "diameter_check": run_diameter_check,
    "collapse": run_collapse,
    "gap": run_gap,
}


def _freeze(rows):
    return tuple(tuple(row) for row in rows)


def format_cell(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return _FLOAT_FORMAT % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def companion_json_path(out_path):
    root, ext = os.path.splitext(out_path)
    if ext.lower() == ".json":
        return out_path + ".meta.json"
    return root + ".json"


def write_companion_json(path, config, result):
    document = {
        "kind": result.kind,
        "config": config,
        "config_digest": result.digest,
        "columns": list(result.columns),
        "rows": [list(row) for row in result.rows],
        "summary": result.summary,
        "diagnostics": result.diagnostics,
    }
    with open(path, "w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def run_experiment(config, out_path=None):
    """Parse, dispatch, and (when out_path or config.output is set) write the
    CSV report and its companion JSON.  Returns the RunResult."""
    if not isinstance(config, dict):
        raise ConfigError("config: expected a JSON object")
    kind = _as_str(_need(config, "kind", "config"), "config.kind", choices=set(KINDS))
    result = _RUNNERS[kind](config)
    target = out_path if out_path is not None else config.get("output")
    if target is not None:
        target = _as_str(target, "config.output")
        write_csv(target, result.columns, result.rows)
        write_companion_json(companion_json_path(target), config, result)
    return result
