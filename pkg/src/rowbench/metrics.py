"""Trajectory and segmentation scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyBatch, GoalBehind, InvalidParams, ShapeMismatch
from .field_gen import Segment
from .mask_oracle import Mask


@dataclass(frozen=True)
class MetricsRecord:
    cha: float
    mae: float
    mse: float
    omega_std: float
    outcome: str = ""
    goal_behind: int = 0  # samples dropped from CHA


def cross_track_error(pose, centerline: Segment) -> float:
    """Signed distance from ``pose[:2]`` to the line through ``centerline``; positive on the left."""
    (x0, y0), (x1, y1) = centerline.start, centerline.end
    dx, dy = x1 - x0, y1 - y0
    n = math.hypot(dx, dy)
    if n == 0:
        raise InvalidParams("degenerate centerline")
    px, py = pose[0] - x0, pose[1] - y0
    return (dx * py - dy * px) / n


def cross_track_errors(xy: np.ndarray, centerline: Segment) -> np.ndarray:
    (x0, y0), (x1, y1) = centerline.start, centerline.end
    dx, dy = x1 - x0, y1 - y0
    n = math.hypot(dx, dy)
    if n == 0:
        raise InvalidParams("degenerate centerline")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return (dx * (xy[:, 1] - y0) - dy * (xy[:, 0] - x0)) / n


def goal_bearings(trajectory, goal) -> tuple[np.ndarray, np.ndarray]:
    """Goal expressed in each rover frame: (forward, lateral) arrays.

    ``trajectory`` rows are (x, y, yaw) or (t, x, y, yaw).
    """
    tr = np.asarray(trajectory, dtype=float)
    if tr.ndim != 2 or tr.shape[0] == 0:
        raise InvalidParams("trajectory must be a non-empty 2-D sequence")
    x, y, yaw = tr[:, -3], tr[:, -2], tr[:, -1]
    gx, gy = goal[0] - x, goal[1] - y
    c, s = np.cos(yaw), np.sin(yaw)
    return c * gx + s * gy, -s * gx + c * gy


def cha_with_count(trajectory, goal) -> tuple[float, int]:
    """Cumulative heading average and the number of samples dropped (goal not ahead)."""
    fwd, lat = goal_bearings(trajectory, goal)
    ahead = fwd > 0
    dropped = int((~ahead).sum())
    if not ahead.any():
        raise GoalBehind(f"goal behind the rover at all {dropped} samples")
    return float(np.mean(np.arctan(lat[ahead] / fwd[ahead]))), dropped


def cha(trajectory, goal) -> float:
    """Mean of arctan(lateral / forward) of the goal in the rover frame.

    Samples with the goal at or behind the rover are excluded; use
    :func:`cha_with_count` to know how many.
    """
    return cha_with_count(trajectory, goal)[0]


def trajectory_metrics(trajectory, commands, centerline: Segment, goal, outcome: str = "") -> MetricsRecord:
    """CHA, MAE, MSE and population std of commanded yaw rate.

    ``commands`` is a sequence of objects with ``omega_z`` or an ``(N, 2)``
    array of ``(v_x, omega_z)``.
    """
    tr = np.asarray(trajectory, dtype=float)
    if tr.ndim != 2 or tr.shape[0] == 0 or len(commands) == 0:
        raise InvalidParams("trajectory and commands must be non-empty")
    e = cross_track_errors(tr[:, -3:-1], centerline)
    if hasattr(commands[0], "omega_z"):
        omega = np.array([c.omega_z for c in commands], dtype=float)
    else:
        omega = np.asarray(commands, dtype=float)[:, 1]
    c, dropped = cha_with_count(tr, goal)
    return MetricsRecord(
        cha=c,
        mae=float(np.mean(np.abs(e))),
        mse=float(np.mean(e * e)),
        omega_std=float(np.std(omega)),
        outcome=outcome,
        goal_behind=dropped,
    )


def _pair(a: Mask, b: Mask) -> tuple[np.ndarray, np.ndarray]:
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatch(f"{a.pixels.shape} vs {b.pixels.shape}")
    return a.pixels.astype(bool), b.pixels.astype(bool)


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union of the plant pixels; 1 when both masks are empty."""
    pa, pb = _pair(a, b)
    union = np.count_nonzero(pa | pb)
    if union == 0:
        return 1.0
    return np.count_nonzero(pa & pb) / union


def seg_loss(pred: Sequence[Mask], truth: Sequence[Mask]) -> float:
    """Batch mean of ``1 - IoU``."""
    if len(pred) != len(truth):
        raise ShapeMismatch(f"batch sizes differ: {len(pred)} vs {len(truth)}")
    if len(pred) == 0:
        raise EmptyBatch("empty batch")
    return float(np.mean([1.0 - iou(p, t) for p, t in zip(pred, truth)]))


def pixel_accuracy(a: Mask, b: Mask) -> float:
    pa, pb = _pair(a, b)
    return np.count_nonzero(pa == pb) / pa.size
