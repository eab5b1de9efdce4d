"""Command line front end: one subcommand per experiment kind.

Configs are JSON files; --seed and --draws override the config before the
digest is computed, so the emitted rows always carry the effective settings.
Exit codes: 0 success, 2 config problems, 3 numerical failures.
"""

import argparse
import json
import sys

from .complexity import EstimationFailure
from .experiments import ConfigError, run_experiment
from .training import TrainingFailure

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = (
    ("estimate", "estimate", "Monte Carlo complexity estimate of one network class"),
    ("bounds", "bound_table", "closed-form bound table for one network"),
    ("sweep-rank", "rank_sweep", "estimate and bound vs rank cap, with scaling slope"),
    ("sweep-depth", "depth_sweep", "bound family vs depth, with crossover depth"),
    ("counterexample", "counterexample", "rank-insensitive vs rank-sensitive complexity"),
    ("diameter", "diameter_check", "empirical output diameter vs its closed-form cap"),
    ("collapse", "collapse", "twin networks with and without a rank-1 bottleneck"),
    ("gap", "gap", "train/test gap vs the assembled generalization bound"),
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rankcap",
        description="complexity estimates and capacity bounds for "
        "rank- and spectral-norm-constrained networks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, kind, help_text in COMMANDS:
        sub = subparsers.add_parser(name, help=help_text)
        sub.set_defaults(kind=kind)
        sub.add_argument("--config", required=True, help="JSON experiment config")
        sub.add_argument("--out", default=None, help="CSV output path (companion JSON beside it)")
        sub.add_argument("--seed", type=int, default=None,
                         help="override data seed and optimizer seed")
        sub.add_argument("--draws", type=int, default=None, help="override n_draws")
        sub.add_argument("--quiet", action="store_true", help="suppress the summary line")
    return parser


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as err:
        raise ConfigError(f"config file: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path}: invalid JSON ({err})") from None
    if not isinstance(config, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return config


def apply_overrides(config, kind, seed, draws):
    """Merge subcommand kind and CLI overrides into the config dict."""
    if "kind" in config:
        if config["kind"] != kind:
            raise ConfigError(
                f"config.kind: {config['kind']!r} does not match subcommand kind {kind!r}"
            )
    config = dict(config)
    config["kind"] = kind
    if seed is not None:
        data = config.get("data")
        if isinstance(data, dict):
            data = dict(data)
            data["seed"] = seed
            config["data"] = data
        if isinstance(config.get("optimizer"), dict):
            optimizer = dict(config["optimizer"])
            optimizer["seed"] = seed
            config["optimizer"] = optimizer
    if draws is not None:
        config["n_draws"] = draws
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        config = apply_overrides(config, args.kind, args.seed, args.draws)
        result = run_experiment(config, out_path=args.out)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationFailure, TrainingFailure) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(result.summary_line())
        if args.out:
            print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
