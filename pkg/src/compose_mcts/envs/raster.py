"""Binary rasters over the fixed tangram canvas [-8, 8]^2."""

from typing import Sequence

import numpy as np

from ..geometry import point_in_polygons
from .tangram_pieces import CANVAS_HALF


def cell_centers(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid of cell-center coordinates; row index grows with y."""
    step = 2.0 * CANVAS_HALF / resolution
    coords = -CANVAS_HALF + (np.arange(resolution) + 0.5) * step
    xs, ys = np.meshgrid(coords, coords)
    return xs, ys


def render_polygons(polys: Sequence[np.ndarray], resolution: int) -> np.ndarray:
    """A cell is filled iff its center lies inside any polygon."""
    xs, ys = cell_centers(resolution)
    return point_in_polygons(polys, xs, ys)


def shift_raster(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate by whole cells; cells shifted in from outside are empty."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[dst_y, dst_x] = mask[src_y, src_x]
    return out


def center_on_centroid(mask: np.ndarray) -> np.ndarray:
    """Shift the filled cells so their centroid sits at the grid center."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return mask.copy()
    h, w = mask.shape
    dy = int(round((h - 1) / 2.0 - rows.mean()))
    dx = int(round((w - 1) / 2.0 - cols.mean()))
    return shift_raster(mask, dy, dx)


def iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def downsample(mask: np.ndarray, size: int) -> np.ndarray:
    """Fraction of filled cells per block (mean pooling)."""
    h, w = mask.shape
    if h % size or w % size:
        raise ValueError(f"cannot pool {mask.shape} to {size}x{size}")
    return mask.reshape(size, h // size, size, w // size).mean(axis=(1, 3))


def rle_encode(mask: np.ndarray) -> dict:
    """Row-major run lengths, starting with a (possibly empty) run of zeros."""
    flat = np.asarray(mask, dtype=bool).ravel()
    changes = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    return {"shape": list(mask.shape), "runs": [int(r) for r in runs]}


def rle_decode(data: dict) -> np.ndarray:
    shape = tuple(data["shape"])
    values = np.zeros(int(np.prod(shape)), dtype=bool)
    pos, fill = 0, False
    for run in data["runs"]:
        values[pos: pos + run] = fill
        pos += run
        fill = not fill
    if pos != values.size:
        raise ValueError("run lengths do not cover the mask")
    return values.reshape(shape)
