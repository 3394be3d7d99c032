"""Parametric row-crop field generation.

Coordinates: the terrain occupies ``[0, length] x [0, width]`` in the
horizontal plane, rows run along +x, and the lateral axis is y. A field is
described by a handful of spacings (row to row inside a group, group to
group, plant to plant along a row) plus a plant footprint, and is
instantiated deterministically from ``(params, seed)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import InvalidParams, UnknownPreset
from .rng import substream

# Guards floor(row_length / plant_spacing) against 200.00000000000003-style noise.
_COUNT_EPS = 1e-9
OBSTACLE_RADIUS_RANGE = (0.05, 0.15)
_OBSTACLE_ATTEMPTS = 100


class Shape(str, enum.Enum):
    ELLIPSOID = "ellipsoid"
    TRUNK_CROWN = "trunk_crown"


@dataclass(frozen=True)
class PlantSpec:
    length: float
    width: float
    height: float
    shape: Shape = Shape.ELLIPSOID
    trunk_radius: float = 0.0
    trunk_height: float = 0.0

    def validate(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise InvalidParams(f"plant dimensions must be positive: {self}")
        if self.shape is Shape.TRUNK_CROWN:
            if not 0 < self.trunk_height < self.height:
                raise InvalidParams("trunk_height must lie in (0, height)")
            if not 0 < self.trunk_radius < self.width / 2:
                raise InvalidParams("trunk_radius must lie in (0, width/2)")

    def scaled(self, k: float) -> PlantSpec:
        return replace(
            self,
            length=self.length * k,
            width=self.width * k,
            height=self.height * k,
            trunk_radius=self.trunk_radius * k,
            trunk_height=self.trunk_height * k,
        )


@dataclass(frozen=True)
class TerrainSpec:
    length: float
    width: float
    delta_h: float
    grid_resolution: float = 0.25
    slope: float = 0.0

    def validate(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise InvalidParams("terrain length and width must be positive")
        if self.grid_resolution <= 0:
            raise InvalidParams("grid_resolution must be positive")
        if self.grid_resolution > min(self.length, self.width):
            raise InvalidParams("grid_resolution larger than the terrain")
        if self.delta_h < 0:
            raise InvalidParams("delta_h must be non-negative")
        if not abs(self.slope) < 0.5:
            raise InvalidParams("|slope| must be below 0.5")


@dataclass(frozen=True)
class FieldParams:
    """Field description.

    ``row_spacing`` is the distance between rows of one group,
    ``group_spacing`` the distance between the last row of a group and the
    first row of the next, ``plant_spacing`` the distance between plants
    along a row. ``scale`` stretches every horizontal length and the plant
    model; terrain irregularity and grid resolution are not scaled.
    """

    crop_name: str
    row_length: float
    num_rows: int
    rows_per_group: int
    row_spacing: float
    group_spacing: float
    plant_spacing: float
    plant: PlantSpec
    terrain: TerrainSpec
    scale: float = 1.0
    obstacle_density: float = 0.01
    plant_jitter: float = 0.05

    def scaled(self) -> FieldParams:
        """Equivalent parameters with the scale folded in (``scale == 1``)."""
        k = self.scale
        return replace(
            self,
            row_length=self.row_length * k,
            row_spacing=self.row_spacing * k,
            group_spacing=self.group_spacing * k,
            plant_spacing=self.plant_spacing * k,
            plant=self.plant.scaled(k),
            terrain=replace(self.terrain, length=self.terrain.length * k, width=self.terrain.width * k),
            plant_jitter=self.plant_jitter * k,
            scale=1.0,
        )

    def validate(self) -> None:
        if not self.scale > 0:
            raise InvalidParams("scale must be positive")
        if not self.row_spacing > 0:
            raise InvalidParams("row_spacing must be positive")
        if not self.group_spacing >= self.row_spacing:
            raise InvalidParams("group_spacing must be >= row_spacing")
        if not self.plant_spacing > 0:
            raise InvalidParams("plant_spacing must be positive")
        if not self.row_length > 0:
            raise InvalidParams("row_length must be positive")
        if int(self.num_rows) != self.num_rows or self.num_rows < 1:
            raise InvalidParams("num_rows must be an integer >= 1")
        if int(self.rows_per_group) != self.rows_per_group or self.rows_per_group < 1:
            raise InvalidParams("rows_per_group must be an integer >= 1")
        if self.plant_jitter < 0 or self.obstacle_density < 0:
            raise InvalidParams("plant_jitter and obstacle_density must be non-negative")
        self.plant.validate()
        self.terrain.validate()
        eff = self.scaled()
        # Lateral footprint only: along-row overlap is allowed (zucchini
        # canopies are longer than their plant spacing).
        if not eff.plant.width < eff.row_spacing:
            raise InvalidParams("plant width must be smaller than row_spacing")
        if eff.row_length > eff.terrain.length:
            raise InvalidParams("rows longer than the terrain")
        if _lateral_extent(eff) > eff.terrain.width:
            raise InvalidParams("rows do not fit across the terrain width")


@dataclass(frozen=True)
class Plant:
    x: float
    y: float
    spec: PlantSpec


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    def point_at(self, distance: float) -> tuple[float, float]:
        """Point ``distance`` meters from ``start`` towards ``end``."""
        (x0, y0), (x1, y1) = self.start, self.end
        n = math.hypot(x1 - x0, y1 - y0)
        return (x0 + (x1 - x0) * distance / n, y0 + (y1 - y0) * distance / n)

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])


@dataclass(frozen=True)
class FieldLayout:
    params: FieldParams
    plants: tuple[Plant, ...]
    obstacles: tuple[Obstacle, ...]
    row_centerlines: tuple[Segment, ...]
    corridor_centerlines: tuple[Segment, ...]
    seed: int
    corridor_widths: tuple[float, ...] = field(default=())

    @property
    def terrain(self) -> TerrainSpec:
        """Terrain spec with the field scale applied."""
        return self.params.scaled().terrain

    @cached_property
    def plant_array(self) -> np.ndarray:
        """``(N, 8)`` float array: x, y, length, width, height, shape, trunk_radius, trunk_height."""
        out = np.empty((len(self.plants), 8))
        for i, p in enumerate(self.plants):
            s = p.spec
            out[i] = (p.x, p.y, s.length, s.width, s.height,
                      1.0 if s.shape is Shape.TRUNK_CROWN else 0.0,
                      s.trunk_radius, s.trunk_height)
        return out

    @cached_property
    def obstacle_array(self) -> np.ndarray:
        """``(M, 3)`` float array: x, y, radius."""
        return np.array([(o.x, o.y, o.radius) for o in self.obstacles], dtype=float).reshape(-1, 3)

    def without_plants(self) -> FieldLayout:
        return replace(self, plants=())

    def clearance(self, corridor_index: int) -> float:
        """Free half-width of a corridor: half its width minus half a plant width."""
        return self.corridor_widths[corridor_index] / 2 - self.params.scaled().plant.width / 2

    def default_corridor(self, rover_radius: float) -> int:
        """Narrowest corridor the rover fits in, nearest the field's middle.

        Falls back to the widest corridor when none offers clearance.
        """
        n = len(self.corridor_centerlines)
        fits = [i for i in range(n) if self.clearance(i) > rover_radius]
        if not fits:
            return max(range(n), key=lambda i: (self.corridor_widths[i], -i))
        narrow = min(self.corridor_widths[i] for i in fits)
        cands = [i for i in fits if self.corridor_widths[i] == narrow]
        ys = [s.start[1] for s in self.row_centerlines]
        mid = (min(ys) + max(ys)) / 2
        return min(cands, key=lambda i: (abs(self.corridor_centerlines[i].start[1] - mid), i))


# Measured crop geometry (terrain L/W/dH, plant L/W/H, spacings, rows).
# Vineyard numbers and the pear trunk dimensions are estimates, not
# measurements.
_PRESETS = {
    "zucchini": dict(
        terrain=(60, 38, 0.2), plant=(0.82, 0.9, 0.6), spacing=(1.8, 3.6, 0.7), rows=7, per_group=2,
    ),
    "lettuce": dict(
        terrain=(60, 25, 0.25), plant=(0.38, 0.34, 0.22), spacing=(0.7, 1.4, 0.4), rows=3, per_group=2,
    ),
    "chard": dict(
        terrain=(60, 12, 0.25), plant=(0.25, 0.4, 0.25), spacing=(0.7, 1.4, 0.3), rows=3, per_group=2,
    ),
    "pear": dict(
        terrain=(80, 45, 0.3), plant=(1.4, 2.2, 3.2), spacing=(5, 5, 2.2), rows=1, per_group=1,
        trunk=(0.12, 1.0),
    ),
    "vineyard": dict(
        terrain=(60, 20, 0.2), plant=(0.8, 0.8, 2.0), spacing=(2.5, 2.5, 1.2), rows=4, per_group=1,
        trunk=(0.06, 0.7),
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(crop_name: str) -> FieldParams:
    """Field parameters for one of the named crops."""
    try:
        p = _PRESETS[crop_name]
    except KeyError:
        raise UnknownPreset(crop_name) from None
    # float() so presets serialise the same way as parsed configs
    length, width, dh = map(float, p["terrain"])
    dims = map(float, p["plant"])
    if "trunk" in p:
        plant = PlantSpec(*dims, shape=Shape.TRUNK_CROWN,
                          trunk_radius=float(p["trunk"][0]), trunk_height=float(p["trunk"][1]))
    else:
        plant = PlantSpec(*dims)
    rr, gg, pp = map(float, p["spacing"])
    return FieldParams(
        crop_name=crop_name,
        row_length=length,
        num_rows=p["rows"],
        rows_per_group=p["per_group"],
        row_spacing=rr,
        group_spacing=gg,
        plant_spacing=pp,
        plant=plant,
        terrain=TerrainSpec(length=length, width=width, delta_h=dh),
    )


def row_spacing_pattern(num_rows: int, rows_per_group: int, row_spacing: float,
                        group_spacing: float) -> list[float]:
    """Lateral gaps between consecutive rows.

    Gap ``i`` separates row ``i`` and row ``i + 1``; it is the group spacing
    when row ``i + 1`` opens a new group.

    >>> row_spacing_pattern(4, 2, 1.0, 2.0)
    [1.0, 2.0, 1.0]
    """
    if num_rows < 2:
        raise InvalidParams("need at least two rows for a spacing pattern")
    if rows_per_group < 1:
        raise InvalidParams("rows_per_group must be >= 1")
    return [group_spacing if (i + 1) % rows_per_group == 0 else row_spacing
            for i in range(num_rows - 1)]


def plants_per_row(row_length: float, plant_spacing: float) -> int:
    return int(math.floor(row_length / plant_spacing + _COUNT_EPS)) + 1


def _lateral_extent(eff: FieldParams) -> float:
    if eff.num_rows == 1:
        return eff.row_spacing
    return float(sum(row_spacing_pattern(eff.num_rows, eff.rows_per_group,
                                         eff.row_spacing, eff.group_spacing)))


def _truncated_normal(rng: np.random.Generator, sigma: float, shape) -> np.ndarray:
    out = rng.normal(0.0, sigma, size=shape)
    bad = np.abs(out) > 3 * sigma
    while bad.any():
        out[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
        bad = np.abs(out) > 3 * sigma
    return out


def generate_field(params: FieldParams, seed: int) -> FieldLayout:
    """Instantiate plants, obstacles and centerlines for ``params``.

    Pure in ``(params, seed)``. Draw order on the layout stream: plant
    jitter (x then y per plant, row-major), then obstacles corridor by
    corridor.
    """
    params.validate()
    eff = params.scaled()
    rng = substream(seed, "layout")
    tl, tw = eff.terrain.length, eff.terrain.width

    if eff.num_rows == 1:
        gaps: list[float] = []
        row_y = [tw / 2 - eff.row_spacing / 2]
    else:
        gaps = row_spacing_pattern(eff.num_rows, eff.rows_per_group, eff.row_spacing, eff.group_spacing)
        y0 = (tw - sum(gaps)) / 2
        row_y = [y0 + float(s) for s in np.concatenate([[0.0], np.cumsum(gaps)])]

    x0 = (tl - eff.row_length) / 2
    x1 = x0 + eff.row_length
    n_per_row = plants_per_row(eff.row_length, eff.plant_spacing)
    xs = x0 + np.arange(n_per_row) * eff.plant_spacing
    px = np.tile(xs, eff.num_rows)
    py = np.repeat(np.asarray(row_y, dtype=float), n_per_row)
    if eff.plant_jitter > 0:
        jit = _truncated_normal(rng, eff.plant_jitter, (px.size, 2))
        px = np.clip(px + jit[:, 0], 0.0, tl)
        py = np.clip(py + jit[:, 1], 0.0, tw)
    plants = tuple(Plant(float(x), float(y), eff.plant) for x, y in zip(px, py))

    rows = tuple(Segment((x0, y), (x1, y)) for y in row_y)
    if eff.num_rows == 1:
        bands = [(row_y[0], row_y[0] + eff.row_spacing)]
    else:
        bands = [(row_y[i], row_y[i + 1]) for i in range(len(gaps))]
    corridors = tuple(Segment((x0, (a + b) / 2), (x1, (a + b) / 2)) for a, b in bands)
    widths = tuple(b - a for a, b in bands)

    obstacles = _place_obstacles(rng, eff, bands, x0, x1, px, py, params.scale)
    return FieldLayout(
        params=params,
        plants=plants,
        obstacles=obstacles,
        row_centerlines=rows,
        corridor_centerlines=corridors,
        seed=int(seed),
        corridor_widths=widths,
    )


def _place_obstacles(rng, eff: FieldParams, bands, x0, x1, px, py, k) -> tuple[Obstacle, ...]:
    if eff.obstacle_density <= 0:
        return ()
    hl, hw = eff.plant.length / 2, eff.plant.width / 2
    rmin, rmax = OBSTACLE_RADIUS_RANGE
    out = []
    for lo, hi in bands:
        count = int(rng.poisson(eff.obstacle_density * (x1 - x0) * (hi - lo)))
        for _ in range(count):
            for _ in range(_OBSTACLE_ATTEMPTS):
                x = rng.uniform(x0, x1)
                y = rng.uniform(lo, hi)
                r = rng.uniform(rmin, rmax)
                inside = ((x - px) / hl) ** 2 + ((y - py) / hw) ** 2 <= 1.0
                if not inside.any():
                    out.append(Obstacle(float(x), float(y), float(r * k)))
                    break
    return tuple(out)
