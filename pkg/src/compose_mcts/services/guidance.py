"""Differentiable constraint penalties and a gradient-descent sampler.

The penalties (angle, overlap, region) score a continuous relaxation of a
rectangle layout; ``descent_sampler`` follows their gradient from a random
start, then snaps the result to the grid so it can be judged like any other
rectangle state.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..envs.rect import (
    CANVAS,
    COORD_MIN,
    RECT_PIECES,
    Inventory,
    Placement,
    RectConfig,
    RectState,
    RegionGoal,
)
from ..lib.exceptions import DataError
from ..models.layers import sigmoid, softplus

logger = logging.getLogger(__name__)

RIGHT_ANGLES = tuple(k * np.pi / 2 for k in range(-2, 3))
EIGHTH_TURNS = tuple(k * np.pi / 4 for k in range(-4, 5))


@dataclass
class ContinuousState:
    """Per-piece centers, angles (radians) and unrotated dimensions."""

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    h: np.ndarray
    types: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.x.size)

    def copy(self) -> "ContinuousState":
        return ContinuousState(
            self.x.copy(), self.y.copy(), self.theta.copy(), self.w.copy(), self.h.copy(), self.types.copy()
        )


@dataclass(frozen=True)
class GuidanceWeights:
    angle: float = 1.0
    overlap: float = 1.0
    region: float = 1.0
    beta: float = 10.0
    targets: tuple[float, ...] = RIGHT_ANGLES


@dataclass
class Gradient:
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray


def angle_loss(theta: np.ndarray, targets: tuple[float, ...] | np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Soft-min squared distance to the nearest target angle, summed over pieces."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    diff = np.asarray(theta, dtype=np.float64)[:, None] - np.asarray(targets, dtype=np.float64)[None, :]
    logits = -beta * diff * diff
    top = logits.max(axis=1, keepdims=True)
    weights = np.exp(logits - top)
    lse = top[:, 0] + np.log(weights.sum(axis=1))
    weights /= weights.sum(axis=1, keepdims=True)
    value = float((-lse / beta).sum())
    grad = (weights * 2.0 * diff).sum(axis=1)
    return value, grad


def effective_radius(w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Half-diagonal: the circle that bounds the piece at any angle."""
    return np.sqrt(w * w + h * h) / 2.0


def overlap_loss(state: ContinuousState) -> tuple[float, np.ndarray, np.ndarray]:
    """Sum over unordered pairs of softplus(r_i + r_j - d_ij).

    Coincident centers contribute no gradient direction.
    """
    if len(state) == 0:
        raise ValueError("overlap loss needs at least one piece")
    dx = state.x[:, None] - state.x[None, :]
    dy = state.y[:, None] - state.y[None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    radius = effective_radius(state.w, state.h)
    slack = radius[:, None] + radius[None, :] - dist
    upper = np.triu(np.ones_like(dist, dtype=bool), k=1)
    value = float(softplus(slack[upper]).sum())
    # Row i collects every pair containing piece i.
    coeff = np.where(dist > 0, -sigmoid(slack) / np.where(dist > 0, dist, 1.0), 0.0)
    np.fill_diagonal(coeff, 0.0)
    grad_x = (coeff * dx).sum(axis=1)
    grad_y = (coeff * dy).sum(axis=1)
    return value, grad_x, grad_y


def region_loss(
    x: np.ndarray,
    y: np.ndarray,
    bounds: tuple[Any, Any, Any, Any],
) -> tuple[float, np.ndarray, np.ndarray]:
    """softplus penalties for centers outside [xmin, xmax] x [ymin, ymax]; bounds may be per piece."""
    xmin, xmax, ymin, ymax = (np.asarray(b, dtype=np.float64) for b in bounds)
    value = float(
        (softplus(xmin - x) + softplus(x - xmax) + softplus(ymin - y) + softplus(y - ymax)).sum()
    )
    grad_x = -sigmoid(xmin - x) + sigmoid(x - xmax)
    grad_y = -sigmoid(ymin - y) + sigmoid(y - ymax)
    return value, np.broadcast_to(grad_x, np.shape(x)).copy(), np.broadcast_to(grad_y, np.shape(y)).copy()


def guidance_total(
    state: ContinuousState,
    weights: GuidanceWeights,
    bounds: tuple[Any, Any, Any, Any],
) -> tuple[float, Gradient, dict[str, float]]:
    a_val, a_grad = angle_loss(state.theta, weights.targets, weights.beta)
    o_val, o_gx, o_gy = overlap_loss(state)
    r_val, r_gx, r_gy = region_loss(state.x, state.y, bounds)
    total = weights.angle * a_val + weights.overlap * o_val + weights.region * r_val
    grad = Gradient(
        x=weights.overlap * o_gx + weights.region * r_gx,
        y=weights.overlap * o_gy + weights.region * r_gy,
        theta=weights.angle * a_grad,
    )
    return total, grad, {"angle": a_val, "overlap": o_val, "region": r_val}


def inset_bounds(region: RegionGoal, w: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, ...]:
    """Per-piece center bounds that keep the whole piece inside the region."""
    x0, x1, y0, y1 = region.bounds()
    xmin, xmax = x0 + w / 2.0, x1 - w / 2.0
    ymin, ymax = y0 + h / 2.0, y1 - h / 2.0
    # A piece longer than the region side gets the region center.
    xmin, xmax = np.minimum(xmin, (x0 + x1) / 2.0), np.maximum(xmax, (x0 + x1) / 2.0)
    ymin, ymax = np.minimum(ymin, (y0 + y1) / 2.0), np.maximum(ymax, (y0 + y1) / 2.0)
    return xmin, xmax, ymin, ymax


def initial_continuous(config: RectConfig, rng: np.random.Generator) -> ContinuousState:
    types = np.repeat(np.arange(len(RECT_PIECES)), config.pieces.counts)
    w = np.array([RECT_PIECES[t].w for t in types], dtype=np.float64)
    h = np.array([RECT_PIECES[t].h for t in types], dtype=np.float64)
    xmin, xmax, ymin, ymax = inset_bounds(config.region, w, h)
    return ContinuousState(
        x=rng.uniform(xmin, xmax),
        y=rng.uniform(ymin, ymax),
        theta=np.zeros(types.size),
        w=w,
        h=h,
        types=types,
    )


@dataclass
class GuidanceResult:
    state: RectState
    continuous: ContinuousState
    final_value: float
    valid: bool
    success: bool
    trace: list[dict[str, float]]


def snap(continuous: ContinuousState, region: RegionGoal) -> tuple[RectState, bool]:
    """Nearest right-angle rotation and grid cell; returns the state and whether cells collide."""
    x0, x1, y0, y1 = region.bounds()
    placements = []
    occupancy = np.zeros((CANVAS, CANVAS), dtype=bool)
    collided = False
    for i in range(len(continuous)):
        quarter = int(np.round(continuous.theta[i] / (np.pi / 2)))
        rot = quarter % 2
        w, h = RECT_PIECES[int(continuous.types[i])].dims(rot)
        px = int(np.round(continuous.x[i] - w / 2.0))
        py = int(np.round(continuous.y[i] - h / 2.0))
        if w <= region.W:
            px = min(max(px, x0), x1 - w)
        if h <= region.H:
            py = min(max(py, y0), y1 - h)
        px = min(max(px, COORD_MIN), -COORD_MIN - w)
        py = min(max(py, COORD_MIN), -COORD_MIN - h)
        placement = Placement(int(continuous.types[i]), rot, px, py)
        for cx, cy in placement.cells():
            cell = (cy - COORD_MIN, cx - COORD_MIN)
            collided |= bool(occupancy[cell])
            occupancy[cell] = True
        placements.append(placement)
    state = RectState(tuple(placements), Inventory((0, 0, 0)), occupancy, region)
    return state, collided


def descent_sampler(
    config: RectConfig,
    rng: np.random.Generator,
    weights: Optional[GuidanceWeights] = None,
    steps: int = 100,
    step_size: float = 0.05,
    scale: float = 1.0,
    start: Optional[ContinuousState] = None,
) -> GuidanceResult:
    """Plain gradient descent on the guidance objective, then snap and judge."""
    weights = weights or GuidanceWeights()
    current = start.copy() if start is not None else initial_continuous(config, rng)
    bounds = inset_bounds(config.region, current.w, current.h)
    trace = []
    value = 0.0
    for iteration in range(steps + 1):
        value, grad, parts = guidance_total(current, weights, bounds)
        trace.append({"iteration": iteration, "f_total": value, **parts})
        if iteration == steps:
            break
        current.x = current.x - step_size * scale * grad.x
        current.y = current.y - step_size * scale * grad.y
        current.theta = current.theta - step_size * scale * grad.theta
    state, collided = snap(current, config.region)
    valid = not collided
    success = valid and all(config.region.contains(p) for p in state.placements)
    return GuidanceResult(state, current, value, valid, success, trace)


def write_trace(trace: list[dict[str, float]], path: Path) -> Path:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for record in trace:
                handle.write(json.dumps(record) + "\n")
    except OSError as e:
        raise DataError(f"Cannot write guidance trace {path}: {e}") from e
    return path
