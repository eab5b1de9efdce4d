import json

import pytest

from rankcap.cli import COMMANDS, apply_overrides, build_parser, main
from rankcap.experiments import ConfigError, config_digest


def write_config(path, config):
    path.write_text(json.dumps(config))
    return str(path)


def estimate_config(**overrides):
    cfg = {
        "network": {
            "dims": [4, 3],
            "rank_caps": [2],
            "spectral_caps": [1.0],
            "activation": {"kind": "relu"},
        },
        "data": {"m": 8, "dim": 4, "max_norm": 1.0, "seed": 0},
        "optimizer": {"step_size": 0.1, "iterations": 15, "restarts": 2, "seed": 1},
        "n_draws": 3,
    }
    cfg.update(overrides)
    return cfg


class TestParser:
    def test_every_command_registered(self):
        parser = build_parser()
        for name, _, _ in COMMANDS:
            args = parser.parse_args([name, "--config", "c.json"])
            assert args.command == name

    def test_kind_attached_to_command(self):
        parser = build_parser()
        assert parser.parse_args(["bounds", "--config", "c"]).kind == "bound_table"
        assert parser.parse_args(["sweep-rank", "--config", "c"]).kind == "rank_sweep"
        assert parser.parse_args(["diameter", "--config", "c"]).kind == "diameter_check"

    def test_config_required(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["estimate"])
        capsys.readouterr()

    def test_command_required(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
        capsys.readouterr()


class TestOverrides:
    def test_kind_injected_when_absent(self):
        merged = apply_overrides({"data": {"seed": 0}}, "estimate", None, None)
        assert merged["kind"] == "estimate"

    def test_kind_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="config.kind"):
            apply_overrides({"kind": "gap"}, "estimate", None, None)

    def test_seed_overrides_data_and_optimizer(self):
        cfg = estimate_config()
        merged = apply_overrides(cfg, "estimate", 42, None)
        assert merged["data"]["seed"] == 42
        assert merged["optimizer"]["seed"] == 42
        assert cfg["data"]["seed"] == 0

    def test_seed_without_optimizer_section(self):
        cfg = estimate_config()
        del cfg["optimizer"]
        merged = apply_overrides(cfg, "estimate", 7, None)
        assert merged["data"]["seed"] == 7
        assert "optimizer" not in merged

    def test_draws_override(self):
        merged = apply_overrides(estimate_config(), "estimate", None, 11)
        assert merged["n_draws"] == 11

    def test_digest_reflects_overrides(self):
        base = apply_overrides(estimate_config(), "estimate", None, None)
        seeded = apply_overrides(estimate_config(), "estimate", 42, None)
        assert config_digest(base) != config_digest(seeded)


class TestMain:
    def test_estimate_success(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path / "c.json", estimate_config())
        out = tmp_path / "r.csv"
        code = main(["estimate", "--config", cfg_path, "--out", str(out)])
        assert code == 0
        captured = capsys.readouterr()
        assert "estimate:" in captured.out
        assert str(out) in captured.out
        assert out.exists()
        assert (tmp_path / "r.json").exists()

    def test_quiet_suppresses_output(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path / "c.json", estimate_config())
        code = main(["estimate", "--config", cfg_path, "--quiet"])
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_missing_config_file_exit_2(self, tmp_path, capsys):
        code = main(["estimate", "--config", str(tmp_path / "nope.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_json_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["estimate", "--config", str(bad)])
        assert code == 2
        assert "invalid JSON" in capsys.readouterr().err

    def test_config_error_exit_2_with_field_path(self, tmp_path, capsys):
        cfg = estimate_config()
        cfg["data"]["dim"] = 9
        cfg_path = write_config(tmp_path / "c.json", cfg)
        code = main(["estimate", "--config", cfg_path])
        assert code == 2
        assert "config.data.dim" in capsys.readouterr().err

    def test_kind_mismatch_exit_2(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path / "c.json", estimate_config(kind="gap"))
        code = main(["bounds", "--config", cfg_path])
        assert code == 2
        assert "config.kind" in capsys.readouterr().err

    def test_non_object_config_exit_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text("[1, 2]")
        code = main(["estimate", "--config", str(cfg_path)])
        assert code == 2
        capsys.readouterr()

    def test_seed_override_changes_rows(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", estimate_config())
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        c = tmp_path / "c.csv"
        assert main(["estimate", "--config", cfg_path, "--out", str(a), "--quiet"]) == 0
        assert main(["estimate", "--config", cfg_path, "--out", str(b), "--quiet",
                     "--seed", "9"]) == 0
        assert main(["estimate", "--config", cfg_path, "--out", str(c), "--quiet",
                     "--seed", "9"]) == 0
        assert a.read_bytes() != b.read_bytes()
        assert b.read_bytes() == c.read_bytes()

    def test_draws_override_row_count(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", estimate_config())
        out = tmp_path / "d.csv"
        assert main(["estimate", "--config", cfg_path, "--out", str(out), "--quiet",
                     "--draws", "5"]) == 0
        assert len(out.read_text().splitlines()) == 6

    def test_bounds_subcommand(self, tmp_path, capsys):
        cfg = {
            "network": estimate_config()["network"],
            "data": {"m": 8, "dim": 4, "max_norm": 1.0, "seed": 0},
        }
        cfg_path = write_config(tmp_path / "b.json", cfg)
        code = main(["bounds", "--config", cfg_path])
        assert code == 0
        assert "bound_table:" in capsys.readouterr().out

    def test_diverging_gap_run_exit_3(self, tmp_path, capsys):
        cfg = {
            "network": {
                "dims": [3, 3, 1],
                "rank_caps": [3, 1],
                "spectral_caps": [1e4, 1e-9],
                "activation": {"kind": "identity"},
            },
            "data": {"m": 3, "dim": 3, "max_norm": 1e4, "seed": 0, "task": "sphere_uniform"},
            "optimizer": {"step_size": 0.1, "iterations": 5, "restarts": 1, "seed": 0},
            "n_draws": 2,
            "train": {"epochs": 2, "learning_rate": 1e308, "batch_size": 3},
            "n_seeds": 4,
        }
        cfg_path = write_config(tmp_path / "g.json", cfg)
        code = main(["gap", "--config", cfg_path])
        assert code == 3
        assert "error:" in capsys.readouterr().err
