"""Validated loading of dataset splits, goal sets and action tables.

Every command that consumes artifacts goes through ``FileHandler`` so a
missing or malformed input surfaces as a ``DataError`` with the path in it.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

from ..envs.action_table import ActionTable, load_action_table
from ..envs.rect import RectConfig, RectEnv
from ..envs.rect_dataset import load_split
from ..envs.tangram import MaskMode, TangramEnv, TangramGoal, goal_from_json, goal_to_json
from ..lib.exceptions import DataError, DatasetError, UsageError

logger = logging.getLogger(__name__)


@dataclass
class FileValidationResult:
    """Result of file validation."""
    is_valid: bool
    file_size_mb: float
    error_message: Optional[str] = None


class FileHandler:
    """Artifact loader rooted at a dataset directory.

    Splits live in ``<data_dir>/<split>.json``: rectangle configs for the
    rect environment, run-length-encoded goals for tangram.
    """

    MAX_FILE_SIZE_MB = 512.0

    def __init__(self, data_dir: Union[str, Path], actions: Optional[Union[str, Path]] = None):
        self.data_dir = Path(data_dir)
        self.actions_path = Path(actions) if actions is not None else None
        self._table: Optional[ActionTable] = None

    def validate_file(self, file_path: Union[str, Path]) -> FileValidationResult:
        """Validate the file exists, is JSON by extension and within the size limit."""
        file_path = Path(file_path)
        if not file_path.is_file():
            return FileValidationResult(False, 0.0, f"File not found: {file_path}")
        size_mb = file_path.stat().st_size / (1024 * 1024)
        if file_path.suffix.lower() != ".json":
            return FileValidationResult(False, size_mb, f"Expected a .json file: {file_path}")
        if size_mb > self.MAX_FILE_SIZE_MB:
            return FileValidationResult(False, size_mb, f"File exceeds {self.MAX_FILE_SIZE_MB} MB: {file_path}")
        return FileValidationResult(True, size_mb)

    def split_path(self, split: str) -> Path:
        return self.data_dir / f"{split}.json"

    def _checked(self, path: Path) -> Path:
        result = self.validate_file(path)
        if not result.is_valid:
            raise DataError(result.error_message)
        return path

    def load_rect_split(self, split: str) -> list[RectConfig]:
        configs = load_split(self._checked(self.split_path(split)))
        logger.debug(f"Loaded {len(configs)} rectangle configs from {split}")
        return configs

    def load_tangram_split(self, split: str) -> list[TangramGoal]:
        path = self._checked(self.split_path(split))
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            goals = [goal_from_json(entry) for entry in data]
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"Cannot read tangram goals {path}: {e}") from e
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"Malformed tangram goals in {path}: {e}") from e
        logger.debug(f"Loaded {len(goals)} tangram goals from {split}")
        return goals

    def action_table(self) -> ActionTable:
        if self._table is None:
            if self.actions_path is None:
                raise UsageError("the tangram environment needs --actions")
            self._table = load_action_table(self._checked(self.actions_path))
        return self._table

    def build_env(self, env_name: str, mask: str = "full") -> Any:
        if env_name == "rect":
            return RectEnv()
        if env_name == "tangram":
            return TangramEnv(self.action_table(), MaskMode(mask))
        raise UsageError(f"unknown environment {env_name!r}")

    def load_tasks(self, env_name: str, split: str) -> list[Any]:
        tasks = self.load_rect_split(split) if env_name == "rect" else self.load_tangram_split(split)
        if not tasks:
            raise DatasetError(f"split {split} in {self.data_dir} is empty")
        return tasks

    def has_split(self, split: str) -> bool:
        return self.split_path(split).is_file()


def save_tangram_goals(goals: list[TangramGoal], path: Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps([goal_to_json(g) for g in goals]), encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e
    return path
