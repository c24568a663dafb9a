"""SVG rendering of compositions and JSON-lines record export.

Pieces are drawn as filled outlines on the fixed canvas; rectangle items
also draw their goal region box.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from ..envs.rect import RECT_PIECES, Placement, RegionGoal, config_from_json, placement_vertices
from ..envs.tangram import goal_from_json, pose_from_json
from ..envs.tangram_pieces import CANVAS_HALF, PIECES, pose_vertices
from ..lib.exceptions import DataError

logger = logging.getLogger(__name__)

PALETTE = ("#e4572e", "#29335c", "#f3a712", "#669bbc", "#a8c686", "#8e5572", "#4f6d7a")
SVG_HEADER = '<?xml version="1.0" encoding="UTF-8"?>'


@dataclass
class Shape:
    piece: int
    label: str
    points: np.ndarray


@dataclass
class RenderItem:
    name: str
    shapes: list[Shape]
    region: Optional[RegionGoal] = None


@dataclass
class ExportConfig:
    """Configuration for SVG export."""
    scale: float = 20.0
    canvas_half: float = CANVAS_HALF
    stroke_width: float = 1.5
    margin: float = 10.0


@dataclass
class ExportResult:
    """Result of export operation."""
    success: bool
    file_path: Optional[str] = None
    file_size_bytes: Optional[int] = None
    error_message: Optional[str] = None


def rect_shapes(placements: Iterable[Placement]) -> list[Shape]:
    return [
        Shape(p.type, RECT_PIECES[p.type].name, np.array(placement_vertices(p), dtype=np.float64))
        for p in placements
    ]


def tangram_shapes(poses: Sequence[Any]) -> list[Shape]:
    return [
        Shape(i, PIECES[i].name, pose_vertices(i, pose))
        for i, pose in enumerate(poses)
        if pose is not None
    ]


def _fmt(value: float) -> str:
    return f"{value:.3f}".rstrip("0").rstrip(".")


def svg_document(item: RenderItem, config: Optional[ExportConfig] = None) -> str:
    """Standalone SVG; world y points up, so rows are flipped."""
    config = config or ExportConfig()
    half, scale, margin = config.canvas_half, config.scale, config.margin
    size = 2 * half * scale + 2 * margin

    def to_px(x: float, y: float) -> str:
        return f"{_fmt((x + half) * scale + margin)},{_fmt((half - y) * scale + margin)}"

    lines = [
        SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(size)}" height="{_fmt(size)}" '
        f'viewBox="0 0 {_fmt(size)} {_fmt(size)}">',
        f"<title>{item.name}</title>",
        f'<rect x="0" y="0" width="{_fmt(size)}" height="{_fmt(size)}" fill="#ffffff"/>',
    ]
    if item.region is not None:
        x0, x1, y0, y1 = item.region.bounds()
        corners = " ".join(to_px(x, y) for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1)))
        lines.append(
            f'<polygon class="region" points="{corners}" fill="none" stroke="#000000" '
            f'stroke-dasharray="6,4" stroke-width="{_fmt(config.stroke_width)}"/>'
        )
    for shape in item.shapes:
        points = " ".join(to_px(float(x), float(y)) for x, y in shape.points)
        color = PALETTE[shape.piece % len(PALETTE)]
        lines.append(
            f'<polygon class="piece" data-piece="{shape.label}" points="{points}" fill="{color}" '
            f'fill-opacity="0.85" stroke="#222222" stroke-width="{_fmt(config.stroke_width)}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _item_from_description(name: str, env_name: str, desc: dict[str, Any]) -> RenderItem:
    if env_name == "rect":
        placements = [Placement(int(t), int(r), int(x), int(y)) for t, r, x, y in desc["placements"]]
        region = RegionGoal(*desc["region"]) if desc.get("region") else None
        return RenderItem(name, rect_shapes(placements), region)
    poses = [pose_from_json(p) for p in desc["poses"]]
    return RenderItem(name, tangram_shapes(poses))


def load_render_items(path: Union[str, Path], env_name: str, limit: Optional[int] = None) -> list[RenderItem]:
    """Items from a dataset split (``.json``) or an episode log (``.jsonl``)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"File not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".jsonl":
            records = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            records = json.loads(text)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read render input {path}: {e}") from e
    if not isinstance(records, list):
        raise DataError(f"{path} must hold a list of records")

    items = []
    try:
        for i, record in enumerate(records[:limit] if limit else records):
            if "final" in record:
                items.append(_item_from_description(str(record.get("id", i)), env_name, record["final"]))
            elif env_name == "rect":
                config = config_from_json(record)
                items.append(RenderItem(config.signature, rect_shapes(config.solution), config.region))
            else:
                goal = goal_from_json(record)
                if goal.source_poses is None:
                    logger.warning(f"Goal {goal.source_id} has no source configuration; skipped")
                    continue
                items.append(RenderItem(goal.source_id, tangram_shapes(goal.source_poses)))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Malformed render record in {path}: {e}") from e
    return items


class ExportService:
    """Writes SVG renderings and JSON-lines records into one output directory."""

    def __init__(self, output_directory: Union[str, Path], config: Optional[ExportConfig] = None):
        self.output_directory = Path(output_directory)
        self.config = config or ExportConfig()

    def export_svg(self, item: RenderItem, file_name: Optional[str] = None) -> ExportResult:
        target = self.output_directory / (file_name or f"{item.name}.svg")
        try:
            self.output_directory.mkdir(parents=True, exist_ok=True)
            target.write_text(svg_document(item, self.config), encoding="utf-8")
        except OSError as e:
            logger.error(f"SVG export failed: {e}")
            return ExportResult(success=False, error_message=str(e))
        return ExportResult(success=True, file_path=str(target), file_size_bytes=target.stat().st_size)

    def export_all(self, items: Sequence[RenderItem]) -> list[ExportResult]:
        results = [self.export_svg(item, f"{i:04d}_{item.name}.svg") for i, item in enumerate(items)]
        failed = sum(not r.success for r in results)
        if failed:
            raise DataError(f"{failed} of {len(results)} SVG files could not be written")
        logger.info(f"Rendered {len(results)} SVG files into {self.output_directory}")
        return results

    def export_jsonl(self, records: Iterable[dict[str, Any]], file_name: str) -> ExportResult:
        target = self.output_directory / file_name
        try:
            self.output_directory.mkdir(parents=True, exist_ok=True)
            with target.open("w", encoding="utf-8") as handle:
                for record in records:
                    handle.write(json.dumps(record) + "\n")
        except OSError as e:
            raise DataError(f"Cannot write {target}: {e}") from e
        return ExportResult(success=True, file_path=str(target), file_size_bytes=target.stat().st_size)
