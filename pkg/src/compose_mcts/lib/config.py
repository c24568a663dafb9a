"""Configuration management for compose-mcts.

Two layers: ``Config`` holds environment-backed process defaults (seed, log
level, parallelism) and an optional JSON/YAML settings file; the pydantic
run-config models describe what a single command needs and reject unknown keys.
"""

import json
import os
from pathlib import Path
from typing import Any, Literal, Optional, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .exceptions import ConfigError, DataError, UsageError


DEFAULT_SEED = 0

RunConfigT = TypeVar("RunConfigT", bound="RunConfig")
MethodName = Literal["greedy", "sampled", "search", "random", "guidance"]


class Config:
    """compose-mcts process configuration."""

    def __init__(self, config_file: Optional[str] = None):
        """Initialize configuration.

        Args:
            config_file: Path to a JSON or YAML configuration file (optional)
        """
        self.config_file = config_file
        self._config: dict[str, Any] = {}
        self._load_config()

    def _load_config(self) -> None:
        """Load configuration from environment and files."""
        self._config = {
            "run": {
                "seed": _env_int("COMPOSE_MCTS_SEED", DEFAULT_SEED),
                "jobs": _env_int("COMPOSE_MCTS_JOBS", os.cpu_count() or 1),
            },
            "logging": {
                "level": os.getenv("COMPOSE_MCTS_LOG_LEVEL", "INFO"),
            },
            "command": {},
        }
        if self.config_file:
            self._config["command"] = read_config_file(self.config_file)

    @property
    def seed(self) -> int:
        return int(self._config["run"]["seed"])

    @property
    def jobs(self) -> int:
        return max(1, int(self._config["run"]["jobs"]))

    def run_defaults(self) -> dict[str, Any]:
        """Seed and parallelism every run config starts from."""
        return {"seed": self.seed, "jobs": self.jobs}

    @property
    def command_settings(self) -> dict[str, Any]:
        """Key-value settings read from the config file."""
        return dict(self._config["command"])

    def get(self, key: str, default=None):
        """Get configuration value by dotted key."""
        value: Any = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON or YAML mapping."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read config file {path}: {e}") from e
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Config file {path} is not valid: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    return data


class RunConfig(BaseModel):
    """Base for per-command configs: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    seed: int = DEFAULT_SEED
    out: Path = Path("out")
    jobs: int = Field(default=1, ge=1)
    force: bool = False


def resolve_config(
    model: type[RunConfigT],
    file_settings: Optional[dict[str, Any]],
    overrides: dict[str, Any],
) -> RunConfigT:
    """Merge model defaults < file settings < flag overrides.

    Flags left at ``None`` do not override anything.
    """
    merged: dict[str, Any] = dict(file_settings or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(merged)
    except ValidationError as e:
        raise UsageError(f"Invalid {model.__name__}: {e}") from e


def prepare_output_dir(path: Path, force: bool) -> Path:
    """Create ``path``; refuse a non-empty existing directory unless forced."""
    path = Path(path)
    if path.exists() and any(path.iterdir()) and not force:
        raise UsageError(f"Output directory {path} already exists (use --force)")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"Cannot create output directory {path}: {e}") from e
    return path


def write_resolved_config(config: RunConfig, directory: Path, name: str = "config.json") -> Path:
    """Write the resolved config next to the command's outputs."""
    target = Path(directory) / name
    try:
        target.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write {target}: {e}") from e
    return target


class GenRectConfig(RunConfig):
    """Rectangle dataset generation."""

    train: int = Field(default=200, ge=0)
    val: int = Field(default=20, ge=0)
    test: int = Field(default=50, ge=0)
    max_attempts_factor: int = Field(default=200, ge=1)
    node_limit: int = Field(default=200_000, ge=1)


class PrecomputeConfig(RunConfig):
    """Tangram action-table precomputation."""

    out: Path = Path("tangram_actions.json")


class TangramGoalsConfig(RunConfig):
    """Tangram goal dataset generation."""

    train: int = Field(default=200, ge=0)
    val: int = Field(default=20, ge=0)
    test: int = Field(default=50, ge=0)
    actions: Path = Path("tangram_actions.json")
    resolution: int = Field(default=64, ge=8)


class EvalConfig(RunConfig):
    """Frozen-policy evaluation over one split."""

    env: Literal["rect", "tangram"] = "rect"
    data: Path = Path("data")
    actions: Optional[Path] = None
    checkpoint: Optional[Path] = None
    split: Literal["train", "val", "test"] = "test"
    method: MethodName = "search"
    temperature: float = Field(default=1.0, ge=0.0)
    gumbel_scale: float = Field(default=1.0, ge=0.0)
    simulations: int = Field(default=64, ge=1)
    num_sampled: int = Field(default=16, ge=1)
    mask: Literal["full", "partial"] = "full"
    reward: Literal["learned", "oracle"] = "learned"
    guidance_steps: int = Field(default=100, ge=0)
    guidance_step_size: float = Field(default=0.05, gt=0.0)
    guidance_scale: float = Field(default=1.0, gt=0.0)
    limit: Optional[int] = Field(default=None, ge=1)


class BenchmarkConfig(EvalConfig):
    """Several evaluation methods written into one combined report."""

    methods: list[MethodName] = Field(default_factory=lambda: ["random", "greedy", "search", "guidance"])


class RenderConfig(RunConfig):
    """SVG rendering of dataset configs or trajectory end states."""

    input: Path = Path("data/test.json")
    env: Literal["rect", "tangram"] = "rect"
    limit: int = Field(default=20, ge=1)
