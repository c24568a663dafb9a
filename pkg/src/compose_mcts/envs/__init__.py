"""Composition environments: rectangle packing and tangram assembly."""

from .base import CompositionEnv, StepOutcome
from .rect import RectConfig, RectEnv, RectState, RegionGoal
from .tangram import MaskMode, TangramEnv, TangramGoal, TangramState

__all__ = [
    "CompositionEnv", "StepOutcome",
    "RectConfig", "RectEnv", "RectState", "RegionGoal",
    "MaskMode", "TangramEnv", "TangramGoal", "TangramState",
]
