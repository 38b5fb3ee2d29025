"""Tests for run manifest loading, overrides and validation."""

import json
from pathlib import Path

import pytest

from core.errors import ConfigError
from core.manifest import DEFAULT_C_GRID, Command, OptimizerConfig, PhiMode, RunConfig, merge_raw


FIXTURES = Path(__file__).parent / "fixtures"
MANIFESTS = Path(__file__).parent.parent / "manifests"


class TestManifestLoading:
    def test_load_sample_manifest(self):
        config = RunConfig.from_file(FIXTURES / "sample_manifest.json")
        assert config.command is Command.MC_POWER
        assert config.model.kind == "law"
        assert config.model.mixing == "convex"
        assert config.delta_grid == (0.0, 0.2)
        assert config.null_reps == 6
        assert config.optimizer.starts == 2
        assert config.is_law

    @pytest.mark.parametrize("name", ["test_mean.json", "test_law.json", "level_mean.json",
                                      "level_hetero.json", "power_law.json", "probe_law.json"])
    def test_shipped_manifests_parse(self, name):
        config = RunConfig.from_file(MANIFESTS / name)
        assert config.command.value == json.loads((MANIFESTS / name).read_text())["command"]

    def test_defaults(self):
        config = RunConfig.from_dict({"command": "test-mean", "data": "x.csv"})
        assert config.c == 1.0
        assert config.alpha == 0.10
        assert config.h is None
        assert config.bootstrap_size == 499
        assert config.c_grid == DEFAULT_C_GRID
        assert config.phi is PhiMode.EMPIRICAL
        assert config.optimizer == OptimizerConfig()

    def test_law_default_bootstrap_size(self):
        config = RunConfig.from_dict({"command": "test-law", "data": "x.csv"})
        assert config.bootstrap_size == 199

    @pytest.mark.parametrize("command, kind, reps, null_reps", [
        ("mc-level", "mean-homo", 500, 500),
        ("mc-level", "law", 1000, 1000),
        ("mc-power", "mean-hetero", 250, 500),
        ("mc-power", "law", 500, 1000),
        ("mc-probe", "law", 100, 1000),
    ])
    def test_default_replications(self, command, kind, reps, null_reps):
        config = RunConfig.from_dict({"command": command, "model": {"kind": kind}})
        assert config.replications == reps
        assert config.null_replications == null_reps

    def test_reps_override_both_counts(self):
        config = RunConfig.from_dict({"command": "mc-power", "model": {"kind": "law"}, "reps": 7})
        assert config.replications == 7
        assert config.null_replications == 7

    def test_null_reps_override(self):
        config = RunConfig.from_dict({"command": "mc-power", "model": {}, "reps": 7, "null_reps": 9})
        assert config.replications == 7
        assert config.null_replications == 9

    def test_c_grid_matches_powers_of_root_two(self):
        assert DEFAULT_C_GRID == pytest.approx([0.5, 2 ** -0.5, 1.0, 2 ** 0.5, 2.0])


class TestOverrides:
    def test_flags_override_manifest(self):
        config = RunConfig.from_file(FIXTURES / "sample_manifest.json",
                                     {"seed": 99, "model": {"n": 80, "kind": None}})
        assert config.seed == 99
        assert config.model.n == 80
        assert config.model.kind == "law"

    def test_none_values_are_ignored(self):
        merged = merge_raw({"c": 2.0, "optimizer": {"starts": 3}}, {"c": None, "optimizer": {"starts": None}})
        assert merged == {"c": 2.0, "optimizer": {"starts": 3}}

    def test_nested_block_without_base(self):
        merged = merge_raw({}, {"optimizer": {"starts": None, "max_evals": 10}})
        assert merged == {"optimizer": {"max_evals": 10}}

    def test_comma_separated_grid(self):
        config = RunConfig.from_dict({"command": "mc-level", "model": {}, "c_grid": "0.5,1,2"})
        assert config.c_grid == (0.5, 1.0, 2.0)


class TestManifestValidation:
    def test_missing_command_raises(self):
        with pytest.raises(ConfigError, match="command"):
            RunConfig.from_dict({"data": "x.csv"})

    def test_unknown_command_raises(self):
        with pytest.raises(ConfigError, match="Unknown command"):
            RunConfig.from_dict({"command": "test-median"})

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_range(self, alpha):
        with pytest.raises(ConfigError, match="alpha"):
            RunConfig.from_dict({"command": "test-mean", "data": "x.csv", "alpha": alpha})

    def test_c_positive(self):
        with pytest.raises(ConfigError, match="c must be positive"):
            RunConfig.from_dict({"command": "test-mean", "data": "x.csv", "c": 0})

    def test_B_positive(self):
        with pytest.raises(ConfigError, match="B must be"):
            RunConfig.from_dict({"command": "test-mean", "data": "x.csv", "B": 0})

    def test_test_needs_data(self):
        with pytest.raises(ConfigError, match="data file"):
            RunConfig.from_dict({"command": "test-law"})

    def test_study_needs_model(self):
        with pytest.raises(ConfigError, match="model block"):
            RunConfig.from_dict({"command": "mc-level"})

    def test_level_study_needs_null(self):
        with pytest.raises(ConfigError, match="delta must be 0"):
            RunConfig.from_dict({"command": "mc-level", "model": {"delta": 0.5}})

    def test_power_grid_needs_zero(self):
        with pytest.raises(ConfigError, match="include 0"):
            RunConfig.from_dict({"command": "mc-power", "model": {}, "delta_grid": [0.5, 1.0]})

    def test_law_model_is_bivariate(self):
        with pytest.raises(ConfigError, match="bivariate"):
            RunConfig.from_dict({"command": "mc-level", "model": {"kind": "law", "p": 3}})

    def test_unknown_optimizer_key(self):
        with pytest.raises(ConfigError, match="Unknown optimizer keys"):
            RunConfig.from_dict({"command": "test-mean", "data": "x.csv", "optimizer": {"startz": 2}})

    def test_bad_phi(self):
        with pytest.raises(ConfigError, match="phi"):
            RunConfig.from_dict({"command": "test-law", "data": "x.csv", "phi": "uniform"})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            RunConfig.from_file(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="Invalid JSON"):
            RunConfig.from_file(path)
