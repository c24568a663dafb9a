"""Unit tests for artifact loading and SVG export."""

import json

import numpy as np
import pytest

from compose_mcts.envs.action_table import save_action_table
from compose_mcts.envs.rect import RectEnv
from compose_mcts.envs.rect_dataset import save_split
from compose_mcts.envs.tangram import TangramEnv, goal_from_state, random_assembly
from compose_mcts.lib.exceptions import DataError, DatasetError, UsageError
from compose_mcts.services.export import ExportService, RenderItem, load_render_items, rect_shapes, svg_document
from compose_mcts.services.file_handler import FileHandler, save_tangram_goals

pytestmark = pytest.mark.unit


class TestFileHandler:
    def test_missing_split(self, tmp_path):
        with pytest.raises(DataError, match="test.json"):
            FileHandler(tmp_path).load_tasks("rect", "test")

    def test_wrong_extension(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("x", encoding="utf-8")
        result = FileHandler(tmp_path).validate_file(path)
        assert not result.is_valid
        assert ".json" in result.error_message

    def test_rect_split(self, tmp_path, small_square_config):
        save_split([small_square_config], tmp_path / "val.json")
        handler = FileHandler(tmp_path)
        assert handler.has_split("val")
        assert handler.load_tasks("rect", "val")[0].signature == small_square_config.signature
        assert isinstance(handler.build_env("rect"), RectEnv)

    def test_empty_split(self, tmp_path):
        (tmp_path / "train.json").write_text("[]", encoding="utf-8")
        with pytest.raises(DatasetError):
            FileHandler(tmp_path).load_tasks("rect", "train")

    def test_tangram_needs_action_table(self, tmp_path):
        with pytest.raises(UsageError):
            FileHandler(tmp_path).build_env("tangram")

    def test_unknown_environment(self, tmp_path):
        with pytest.raises(UsageError):
            FileHandler(tmp_path).build_env("hexagon")

    def test_tangram_goals_and_table(self, tmp_path, action_table):
        goal = goal_from_state(random_assembly(action_table, np.random.default_rng(0)), "goal-00000")
        save_tangram_goals([goal], tmp_path / "test.json")
        save_action_table(action_table, tmp_path / "actions.json")
        handler = FileHandler(tmp_path, tmp_path / "actions.json")
        loaded = handler.load_tasks("tangram", "test")
        np.testing.assert_array_equal(loaded[0].target_mask, goal.target_mask)
        env = handler.build_env("tangram", mask="partial")
        assert isinstance(env, TangramEnv)
        assert env.mode.value == "partial"

    def test_malformed_goal_file(self, tmp_path):
        (tmp_path / "test.json").write_text(json.dumps([{"source_id": "g"}]), encoding="utf-8")
        with pytest.raises(DatasetError):
            FileHandler(tmp_path).load_tangram_split("test")


class TestExport:
    def test_svg_has_region_and_pieces(self, small_square_config):
        item = RenderItem("square", rect_shapes(small_square_config.solution), small_square_config.region)
        document = svg_document(item)
        assert document.startswith('<?xml version="1.0"')
        assert document.count('class="piece"') == 3
        assert document.count('class="region"') == 1

    def test_render_dataset_split(self, tmp_path, small_square_config):
        path = save_split([small_square_config], tmp_path / "test.json")
        items = load_render_items(path, "rect")
        results = ExportService(tmp_path / "svg").export_all(items)
        assert len(results) == 1
        assert results[0].success
        assert (tmp_path / "svg" / f"0000_{small_square_config.signature}.svg").is_file()

    def test_render_episode_log(self, tmp_path, rect_env, small_square_config):
        state = rect_env.initial_state(small_square_config)
        record = {"id": "ep-0", "final": rect_env.describe(state)}
        path = tmp_path / "episodes.jsonl"
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        items = load_render_items(path, "rect")
        assert items[0].name == "ep-0"
        assert items[0].shapes == []

    def test_malformed_render_input(self, tmp_path):
        path = tmp_path / "test.json"
        path.write_text(json.dumps({"not": "a list"}), encoding="utf-8")
        with pytest.raises(DataError):
            load_render_items(path, "rect")

    def test_jsonl_export(self, tmp_path):
        result = ExportService(tmp_path).export_jsonl([{"a": 1}, {"a": 2}], "records.jsonl")
        lines = (tmp_path / "records.jsonl").read_text(encoding="utf-8").splitlines()
        assert result.success
        assert [json.loads(line)["a"] for line in lines] == [1, 2]
