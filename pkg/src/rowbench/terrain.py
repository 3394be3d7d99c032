"""Bumpy heightfield terrain.

The surface is a regular vertex grid over ``[0, length] x [0, width]``.
Each vertex gets ``slope * x`` plus an independent uniform draw in
``[-delta_h / 2, +delta_h / 2]``, so the random part never spans more than
``delta_h`` peak to peak. Queries interpolate bilinearly; the slope term
is kept out of the interpolation so a noise-free field reproduces
``slope * x`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, OutOfBounds
from .field_gen import TerrainSpec
from .rng import substream


@dataclass(frozen=True, eq=False)
class Heightfield:
    spec: TerrainSpec
    nx: int
    ny: int
    heights: np.ndarray  # (nx, ny), index [i, j] <-> (i * dx, j * dy)
    noise: np.ndarray  # random component of ``heights``
    seed: int

    @property
    def dx(self) -> float:
        return self.spec.length / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.spec.width / (self.ny - 1)

    def vertex_xy(self, i: int, j: int) -> tuple[float, float]:
        return i * self.dx, j * self.dy

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.spec.length and 0.0 <= y <= self.spec.width

    def __eq__(self, other):
        if not isinstance(other, Heightfield):
            return NotImplemented
        return (self.spec == other.spec and self.seed == other.seed
                and np.array_equal(self.heights, other.heights))

    __hash__ = None


def grid_shape(spec: TerrainSpec) -> tuple[int, int]:
    return (int(math.floor(spec.length / spec.grid_resolution + 1e-9)) + 1,
            int(math.floor(spec.width / spec.grid_resolution + 1e-9)) + 1)


def generate_heightfield(spec: TerrainSpec, seed: int) -> Heightfield:
    """Random vertex displacement over a sloped plane, deterministic in ``(spec, seed)``.

    Vertex spacing is ``length / (nx - 1)`` so the grid covers the terrain
    exactly; it equals ``grid_resolution`` whenever the resolution divides
    the extent.
    """
    if not spec.grid_resolution > 0:
        raise InvalidParams("grid_resolution must be positive")
    spec.validate()
    nx, ny = grid_shape(spec)
    rng = substream(seed, "terrain")
    half = spec.delta_h / 2
    noise = rng.uniform(-half, half, size=(nx, ny)) if half > 0 else np.zeros((nx, ny))
    xs = np.arange(nx) * (spec.length / (nx - 1))
    heights = spec.slope * xs[:, None] + noise
    heights.setflags(write=False)
    noise.setflags(write=False)
    return Heightfield(spec=spec, nx=nx, ny=ny, heights=heights, noise=noise, seed=int(seed))


def _cell(hf: Heightfield, x: float, y: float):
    if not hf.contains(x, y):
        raise OutOfBounds(f"({x}, {y}) outside terrain {hf.spec.length} x {hf.spec.width}")
    gx = x / hf.dx
    gy = y / hf.dy
    i = min(int(gx), hf.nx - 2)
    j = min(int(gy), hf.ny - 2)
    return i, j, gx - i, gy - j


def height_at(hf: Heightfield, x: float, y: float) -> float:
    """Terrain elevation at ``(x, y)`` (bilinear over the enclosing cell)."""
    i, j, fx, fy = _cell(hf, x, y)
    n = hf.noise
    bump = ((1 - fx) * (1 - fy) * n[i, j] + fx * (1 - fy) * n[i + 1, j]
            + (1 - fx) * fy * n[i, j + 1] + fx * fy * n[i + 1, j + 1])
    return hf.spec.slope * x + bump


def gradient_at(hf: Heightfield, x: float, y: float) -> tuple[float, float]:
    """Analytic gradient ``(dh/dx, dh/dy)`` of the bilinear patch at ``(x, y)``."""
    i, j, fx, fy = _cell(hf, x, y)
    n = hf.noise
    gx = ((1 - fy) * (n[i + 1, j] - n[i, j]) + fy * (n[i + 1, j + 1] - n[i, j + 1])) / hf.dx
    gy = ((1 - fx) * (n[i, j + 1] - n[i, j]) + fx * (n[i + 1, j + 1] - n[i + 1, j])) / hf.dy
    return hf.spec.slope + gx, gy


def heights_at(hf: Heightfield, xy: np.ndarray) -> np.ndarray:
    """Vectorised :func:`height_at` for an ``(N, 2)`` array of in-bounds points."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    x, y = xy[:, 0], xy[:, 1]
    if np.any((x < 0) | (x > hf.spec.length) | (y < 0) | (y > hf.spec.width)):
        raise OutOfBounds("query outside terrain")
    gx, gy = x / hf.dx, y / hf.dy
    i = np.minimum(gx.astype(np.int64), hf.nx - 2)
    j = np.minimum(gy.astype(np.int64), hf.ny - 2)
    fx, fy = gx - i, gy - j
    n = hf.noise
    bump = ((1 - fx) * (1 - fy) * n[i, j] + fx * (1 - fy) * n[i + 1, j]
            + (1 - fx) * fy * n[i, j + 1] + fx * fy * n[i + 1, j + 1])
    return hf.spec.slope * x + bump
