"""Ground-truth plant masks from a pinhole camera.

Camera frame: x forward, y left, z up. Image columns grow to the right and
rows grow downward; the principal point sits at ``(width/2, height/2)``
and pixel ``(i, j)`` is sampled through its centre ``(i + 0.5, j + 0.5)``.
The camera orientation is ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``; positive
pitch tilts the view down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import InvalidParams, InvalidPose
from .field_gen import FieldLayout, Shape
from .rng import substream
from .terrain import Heightfield, heights_at, height_at

DEFAULT_WIDTH = 640
DEFAULT_HEIGHT = 480
DEFAULT_HFOV = 1.211
DEFAULT_MOUNT_HEIGHT = 0.40
DEFAULT_MAX_RANGE = 15.0


@dataclass(frozen=True)
class CameraModel:
    width_px: int = DEFAULT_WIDTH
    height_px: int = DEFAULT_HEIGHT
    hfov: float = DEFAULT_HFOV
    position: tuple[float, float, float] = (0.0, 0.0, DEFAULT_MOUNT_HEIGHT)
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    max_range: float = DEFAULT_MAX_RANGE

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidParams("image dimensions must be >= 1")
        if not 0 < self.hfov < math.pi:
            raise InvalidParams("hfov must lie in (0, pi)")
        if not self.max_range > 0:
            raise InvalidParams("max_range must be positive")

    @property
    def focal_px(self) -> float:
        return (self.width_px / 2) / math.tan(self.hfov / 2)

    @property
    def rotation(self) -> np.ndarray:
        """Columns are the camera's forward, left and up axes in world coordinates."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cr, sr = math.cos(self.roll), math.sin(self.roll)
        rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
        return rz @ ry @ rx


def rover_camera(x: float, y: float, yaw: float, ground: float, base: CameraModel | None = None,
                 mount_height: float = DEFAULT_MOUNT_HEIGHT) -> CameraModel:
    """Camera riding on a rover at ``(x, y)`` heading ``yaw``, level with the horizon."""
    base = base or CameraModel()
    return CameraModel(width_px=base.width_px, height_px=base.height_px, hfov=base.hfov,
                       position=(x, y, ground + mount_height), yaw=yaw,
                       pitch=base.pitch, roll=base.roll, max_range=base.max_range)


@dataclass(frozen=True, eq=False)
class Mask:
    pixels: np.ndarray = field(repr=False)  # (height, width) uint8, 1 = plant

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise InvalidParams("mask pixels must be a 2-D array")
        object.__setattr__(self, "pixels", (px != 0).astype(np.uint8))

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class CorruptionParams:
    flip_prob: float = 0.0
    dilate_px: int = 0
    erode_px: int = 0
    dropout_blocks: int = 0
    dropout_size_px: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise InvalidParams("flip_prob must lie in [0, 1]")
        if min(self.dilate_px, self.erode_px, self.dropout_blocks, self.dropout_size_px) < 0:
            raise InvalidParams("corruption pixel counts must be >= 0")

    @property
    def is_identity(self) -> bool:
        return (self.flip_prob == 0 and self.dilate_px == 0 and self.erode_px == 0
                and (self.dropout_blocks == 0 or self.dropout_size_px == 0))


def project(cam: CameraModel, point) -> tuple[float, float] | None:
    """Pixel coordinates of a world point, or None outside the view frustum.

    The frustum is cut at the image plane and at ``max_range`` meters from
    the camera centre.
    """
    d = np.asarray(point, dtype=float) - np.asarray(cam.position, dtype=float)
    fwd, left, up = cam.rotation.T @ d
    if fwd <= 0 or math.sqrt(float(d @ d)) > cam.max_range:
        return None
    f = cam.focal_px
    u = cam.width_px / 2 - f * left / fwd
    v = cam.height_px / 2 - f * up / fwd
    if 0 <= u < cam.width_px and 0 <= v < cam.height_px:
        return float(u), float(v)
    return None


def scene_primitives(layout: FieldLayout, hf: Heightfield) -> tuple[np.ndarray, np.ndarray]:
    """Plant primitives standing on the terrain.

    Returns ``(ellipsoids, cylinders)``: rows of (cx, cy, cz, semi_x,
    semi_y, semi_z) and (base_x, base_y, base_z, radius, height).
    """
    arr = layout.plant_array
    if arr.shape[0] == 0:
        return np.zeros((0, 6)), np.zeros((0, 5))
    x, y, length, width, height, shape, tr, th = arr.T
    ground = heights_at(hf, arr[:, :2])
    crown = shape == 1.0
    base = np.where(crown, th, 0.0)
    semi_z = (height - base) / 2
    ell = np.column_stack([x, y, ground + base + semi_z, length / 2, width / 2, semi_z])
    cyl = np.column_stack([x, y, ground, tr, th])[crown]
    return np.ascontiguousarray(ell), np.ascontiguousarray(cyl)


def render_primitives(cam: CameraModel, ellipsoids: np.ndarray, cylinders: np.ndarray,
                      backend=None) -> Mask:
    k = backend or kernels.get_backend()
    out = np.zeros((cam.height_px, cam.width_px), dtype=np.uint8)
    k.render(ellipsoids, cylinders, np.asarray(cam.position, dtype=float), cam.rotation,
             cam.focal_px, float(cam.max_range), out)
    return Mask(out)


def check_pose(cam: CameraModel, hf: Heightfield) -> None:
    x, y, z = cam.position
    if hf.contains(x, y) and z < height_at(hf, x, y):
        raise InvalidPose(f"camera at z={z:.3f} is below the terrain")


def render_mask(cam: CameraModel, layout: FieldLayout, hf: Heightfield, backend=None) -> Mask:
    """Binary silhouette of every plant seen through ``cam``.

    A pixel is set when the ray through its centre meets a plant primitive
    no farther than ``cam.max_range``. The terrain itself is never drawn.
    """
    check_pose(cam, hf)
    ell, cyl = scene_primitives(layout, hf)
    return render_primitives(cam, ell, cyl, backend)


def corrupt_mask(mask: Mask, params: CorruptionParams, seed: int) -> Mask:
    """Degrade a clean mask the way an imperfect segmenter would.

    Steps, in order: independent pixel flips, closing (square dilation of
    radius ``dilate_px`` then erosion of radius ``erode_px``), then
    ``dropout_blocks`` zeroed squares of side ``dropout_size_px``.
    """
    px = mask.pixels.copy()
    if params.is_identity:
        return Mask(px)
    rng = substream(seed, "corruption")
    if params.flip_prob > 0:
        px ^= (rng.random(px.shape) < params.flip_prob).astype(np.uint8)
    if params.dilate_px > 0:
        px = ndimage.maximum_filter(px, size=2 * params.dilate_px + 1, mode="nearest")
    if params.erode_px > 0:
        px = ndimage.minimum_filter(px, size=2 * params.erode_px + 1, mode="nearest")
    if params.dropout_blocks > 0 and params.dropout_size_px > 0:
        h, w = px.shape
        size = params.dropout_size_px
        for _ in range(params.dropout_blocks):
            r = int(rng.integers(0, max(h - size, 0) + 1))
            c = int(rng.integers(0, max(w - size, 0) + 1))
            px[r:r + size, c:c + size] = 0
    return Mask(px)
