"""Segmentation-based intra-row steering.

The mask is collapsed into a per-column plant count; the longest run of
(nearly) empty columns is taken as the free passage, and the offset of its
centre from the image centre drives the velocity law

    omega = -omega_gain * d_hat
    v     =  v_max * (1 - d_hat**2)

with ``d_hat = (x_c - w/2) / (w/2)``, followed by clamping to the caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyMask, InvalidParams, NoFreePassage
from .mask_oracle import Mask


@dataclass(frozen=True)
class ControllerConfig:
    omega_gain: float = 3.0
    v_max: float = 1.0
    omega_cap: float = 1.0
    v_cap: float = 0.5
    free_threshold_frac: float = 0.05
    no_passage_patience: int = 5

    def __post_init__(self):
        if min(self.omega_gain, self.v_max, self.omega_cap, self.v_cap) <= 0:
            raise InvalidParams("controller gains and caps must be positive")
        if not 0.0 <= self.free_threshold_frac < 1.0:
            raise InvalidParams("free_threshold_frac must lie in [0, 1)")
        if self.no_passage_patience < 1:
            raise InvalidParams("no_passage_patience must be >= 1")


@dataclass(frozen=True)
class Command:
    v_x: float
    omega_z: float


STOP = Command(0.0, 0.0)


def column_histogram(mask: Mask, backend=None) -> np.ndarray:
    """Number of plant pixels in each image column."""
    if mask.pixels.size == 0:
        raise EmptyMask("mask has no pixels")
    k = backend or kernels.get_backend()
    return k.column_histogram(mask.pixels)


def find_free_cluster(hist, threshold: int, backend=None) -> tuple[int, int] | None:
    """Longest run of columns with count <= threshold, as inclusive (start, end).

    Ties go to the run whose centre is closest to the image centre, then to
    the smaller start column. None when no column qualifies.
    """
    k = backend or kernels.get_backend()
    s, e = k.free_cluster(np.asarray(hist, dtype=np.int64), int(threshold))
    if s < 0:
        return None
    return int(s), int(e)


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def command_from_cluster(start: int, end: int, width: int, cfg: ControllerConfig) -> Command:
    half = width / 2
    d_hat = ((start + end + 1) / 2 - half) / half
    omega = clamp(-cfg.omega_gain * d_hat, -cfg.omega_cap, cfg.omega_cap)
    v = clamp(cfg.v_max * (1.0 - d_hat * d_hat), 0.0, cfg.v_cap)
    # avoid -0.0 so mirrored masks give bit-identical magnitudes
    return Command(v + 0.0, omega + 0.0)


def control_command(mask: Mask, cfg: ControllerConfig = ControllerConfig(), backend=None) -> Command:
    """Velocity command for one frame. Raises NoFreePassage when every column is blocked."""
    hist = column_histogram(mask, backend)
    threshold = math.floor(cfg.free_threshold_frac * mask.height_px)
    run = find_free_cluster(hist, threshold, backend)
    if run is None:
        raise NoFreePassage("no free column in mask")
    return command_from_cluster(run[0], run[1], mask.width_px, cfg)
