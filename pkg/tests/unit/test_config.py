"""Unit tests for configuration layering and output directory handling."""

import json

import pytest

from compose_mcts.lib.config import (
    Config,
    EvalConfig,
    GenRectConfig,
    prepare_output_dir,
    read_config_file,
    resolve_config,
    write_resolved_config,
)
from compose_mcts.lib.exceptions import ConfigError, DataError, UsageError

pytestmark = pytest.mark.unit


class TestConfig:
    def test_environment_defaults(self, monkeypatch):
        monkeypatch.setenv("COMPOSE_MCTS_SEED", "17")
        monkeypatch.setenv("COMPOSE_MCTS_JOBS", "3")
        monkeypatch.setenv("COMPOSE_MCTS_LOG_LEVEL", "DEBUG")
        config = Config()
        assert config.run_defaults() == {"seed": 17, "jobs": 3}
        assert config.get("logging.level") == "DEBUG"
        assert config.get("missing.key", "fallback") == "fallback"

    def test_non_integer_seed(self, monkeypatch):
        monkeypatch.setenv("COMPOSE_MCTS_SEED", "abc")
        with pytest.raises(ConfigError):
            Config()

    def test_yaml_settings_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("iterations: 5\nlam: 0.5\n", encoding="utf-8")
        assert Config(str(path)).command_settings == {"iterations": 5, "lam": 0.5}


class TestReadConfigFile:
    def test_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": 3}), encoding="utf-8")
        assert read_config_file(path) == {"train": 3}

    def test_empty_yaml_is_empty_mapping(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("", encoding="utf-8")
        assert read_config_file(path) == {}

    def test_list_is_rejected(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_config_file(tmp_path / "absent.yaml")


class TestResolveConfig:
    def test_flags_override_file_settings(self):
        config = resolve_config(GenRectConfig, {"train": 10, "val": 4}, {"train": 2, "val": None})
        assert (config.train, config.val, config.test) == (2, 4, 50)

    def test_unknown_key_is_a_usage_error(self):
        with pytest.raises(UsageError):
            resolve_config(GenRectConfig, {"trian": 10}, {})

    def test_invalid_choice(self):
        with pytest.raises(UsageError):
            resolve_config(EvalConfig, {}, {"method": "beam"})

    def test_resolved_config_is_written(self, tmp_path):
        config = resolve_config(GenRectConfig, {}, {"seed": 4, "out": tmp_path})
        written = json.loads(write_resolved_config(config, tmp_path).read_text(encoding="utf-8"))
        assert written["seed"] == 4
        assert written["train"] == 200


class TestOutputDirectory:
    def test_creates_missing_directory(self, tmp_path):
        assert prepare_output_dir(tmp_path / "a" / "b", force=False).is_dir()

    def test_empty_directory_is_reused(self, tmp_path):
        assert prepare_output_dir(tmp_path, force=False) == tmp_path

    def test_non_empty_directory_needs_force(self, tmp_path):
        (tmp_path / "old.txt").write_text("x", encoding="utf-8")
        with pytest.raises(UsageError):
            prepare_output_dir(tmp_path, force=False)
        assert prepare_output_dir(tmp_path, force=True) == tmp_path
