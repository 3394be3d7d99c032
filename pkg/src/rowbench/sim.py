"""Unicycle rover driving the segmentation controller over a generated field."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .controller import STOP, Command, ControllerConfig, control_command
from .errors import GoalBehind, InvalidParams, NoFreePassage, OutOfBounds
from .field_gen import FieldLayout, FieldParams, generate_field
from .mask_oracle import (CameraModel, CorruptionParams, corrupt_mask, render_primitives,
                          rover_camera, scene_primitives)
from .metrics import MetricsRecord, cross_track_error, trajectory_metrics
from .rng import derive_seed, substream
from .terrain import Heightfield, generate_heightfield, gradient_at, height_at


class Outcome(str, enum.Enum):
    GOAL_REACHED = "GoalReached"
    COLLISION = "Collision"
    BLOCKED = "Blocked"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class RoverState:
    x: float
    y: float
    z: float
    yaw: float
    t: float = 0.0


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return a - 2 * math.pi * math.ceil((a - math.pi) / (2 * math.pi))


def step(state: RoverState, cmd: Command, dt: float, hf: Heightfield, drift_sigma: float,
         noise: np.random.Generator, extra_roughness: float = 0.0) -> RoverState:
    """One explicit-Euler unicycle step.

    Terrain roughness enters as yaw-rate noise with standard deviation
    ``drift_sigma * (|grad h| + extra_roughness)`` at the current position;
    ``extra_roughness`` carries the bump of an obstacle under the rover.
    One standard normal is drawn per call whatever the sigma, so streams
    stay aligned.
    """
    if not dt > 0:
        raise InvalidParams("dt must be positive")
    gx, gy = gradient_at(hf, state.x, state.y)
    eta = drift_sigma * (math.hypot(gx, gy) + extra_roughness) * noise.standard_normal()
    x = state.x + cmd.v_x * math.cos(state.yaw) * dt
    y = state.y + cmd.v_x * math.sin(state.yaw) * dt
    yaw = wrap_angle(state.yaw + (cmd.omega_z + eta) * dt)
    if not hf.contains(x, y):
        raise OutOfBounds(f"rover left the terrain at ({x:.3f}, {y:.3f})")
    return RoverState(x, y, height_at(hf, x, y), yaw, state.t + dt)


def footprints(layout: FieldLayout) -> np.ndarray:
    """Plant footprint ellipses as rows (x, y, half_length, half_width)."""
    arr = layout.plant_array
    return np.ascontiguousarray(np.column_stack([arr[:, 0], arr[:, 1], arr[:, 2] / 2, arr[:, 3] / 2]))


_NO_PLANTS = np.zeros((0, 4))
_NO_OBSTACLES = np.zeros((0, 3))


def check_collision(state: RoverState, layout: FieldLayout, rover_radius: float,
                    include_obstacles: bool = True, backend=None) -> bool:
    """Whether the rover disc touches a plant footprint (or an obstacle circle)."""
    k = backend or kernels.get_backend()
    obst = np.ascontiguousarray(layout.obstacle_array) if include_obstacles else _NO_OBSTACLES
    return bool(k.disc_hits(float(state.x), float(state.y), float(rover_radius), footprints(layout), obst))


@dataclass(frozen=True)
class EpisodeConfig:
    field: FieldParams
    seed: int = 0
    # None: narrowest corridor that fits the rover at its start pose
    # (radius plus lateral offset), nearest the middle of the field
    corridor_index: int | None = None
    path_length: float = 20.0
    dt: float = 0.05
    control_period: float = 0.1
    goal_radius: float = 0.5
    timeout: float = 120.0
    rover_radius: float = 0.30
    drift_sigma: float = 0.3
    corruption: CorruptionParams = CorruptionParams()
    start_lateral_offset: float = 0.0
    start_yaw_offset: float = 0.0
    controller: ControllerConfig = ControllerConfig()
    camera: CameraModel = CameraModel()
    empty_field: bool = False  # drop every plant and obstacle after generation
    # "drift": rolling over an obstacle adds obstacle_bump to the roughness
    # driving yaw noise; "collide": touching one ends the episode.
    obstacle_mode: str = "drift"
    obstacle_bump: float = 1.0

    def validate(self) -> None:
        if not 0 < self.dt <= self.control_period:
            raise InvalidParams("need 0 < dt <= control_period")
        ratio = self.control_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise InvalidParams("control_period must be a whole multiple of dt")
        if not self.goal_radius > 0:
            raise InvalidParams("goal_radius must be positive")
        if not 0 < self.path_length <= self.field.scaled().row_length:
            raise InvalidParams("path_length must lie in (0, row_length]")
        if not self.timeout > 0 or not self.rover_radius > 0 or self.drift_sigma < 0:
            raise InvalidParams("timeout and rover_radius must be positive, drift_sigma >= 0")
        if self.obstacle_mode not in ("drift", "collide"):
            raise InvalidParams("obstacle_mode must be 'drift' or 'collide'")
        if self.obstacle_bump < 0:
            raise InvalidParams("obstacle_bump must be >= 0")


@dataclass(frozen=True)
class EpisodeReport:
    trajectory: tuple[tuple[float, float, float, float], ...]  # (t, x, y, yaw) per control tick
    commands: tuple[Command, ...]
    outcome: Outcome
    metrics: MetricsRecord
    seed: int
    config: EpisodeConfig
    corridor_index: int
    goal: tuple[float, float]
    final_state: RoverState
    final_cross_track: float
    cross_track: tuple[float, ...] = field(default=())


def build_world(cfg: EpisodeConfig) -> tuple[FieldLayout, Heightfield]:
    """Layout and terrain for an episode; both fan out from ``cfg.seed``."""
    layout = generate_field(cfg.field, cfg.seed)
    if cfg.empty_field:
        layout = replace(layout, plants=(), obstacles=())
    hf = generate_heightfield(layout.terrain, cfg.seed)
    return layout, hf


def run_episode(cfg: EpisodeConfig, backend=None, world=None) -> EpisodeReport:
    """Drive one corridor until goal, collision, blockage or timeout.

    The camera is re-rendered every ``control_period``; the resulting
    command is held for the physics sub-steps in between. Deterministic in
    ``cfg``.
    """
    cfg.validate()
    k = backend or kernels.get_backend()
    layout, hf = world if world is not None else build_world(cfg)
    n_corr = len(layout.corridor_centerlines)
    ci = cfg.corridor_index
    if ci is None:
        ci = layout.default_corridor(cfg.rover_radius + abs(cfg.start_lateral_offset))
    if not 0 <= ci < n_corr:
        raise InvalidParams(f"corridor_index {ci} not in [0, {n_corr})")
    seg = layout.corridor_centerlines[ci]
    (sx, sy), (ex, ey) = seg.start, seg.end
    heading = math.atan2(ey - sy, ex - sx)
    nx, ny = -math.sin(heading), math.cos(heading)  # left normal
    x0 = sx + cfg.start_lateral_offset * nx
    y0 = sy + cfg.start_lateral_offset * ny
    goal = seg.point_at(cfg.path_length)
    state = RoverState(x0, y0, height_at(hf, x0, y0), wrap_angle(heading + cfg.start_yaw_offset), 0.0)

    ell, cyl = scene_primitives(layout, hf)
    fp = footprints(layout)
    obst = np.ascontiguousarray(layout.obstacle_array)
    blocking = obst if cfg.obstacle_mode == "collide" else _NO_OBSTACLES
    bumpy = obst if cfg.obstacle_mode == "drift" and cfg.obstacle_bump > 0 else _NO_OBSTACLES
    drift = substream(cfg.seed, "drift")
    substeps = int(round(cfg.control_period / cfg.dt))
    patience = cfg.controller.no_passage_patience
    mount = cfg.camera.position[2]

    traj: list[tuple[float, float, float, float]] = []
    cmds: list[Command] = []
    outcome = None
    blocked = 0
    tick = 0
    if k.disc_hits(state.x, state.y, cfg.rover_radius, fp, blocking):
        outcome = Outcome.COLLISION
    while outcome is None:
        if state.t >= cfg.timeout - 1e-9:
            outcome = Outcome.TIMEOUT
            break
        cam = rover_camera(state.x, state.y, state.yaw, state.z, cfg.camera, mount)
        mask = render_primitives(cam, ell, cyl, k)
        if not cfg.corruption.is_identity:
            mask = corrupt_mask(mask, cfg.corruption, derive_seed(cfg.seed, "corruption", tick))
        try:
            cmd = control_command(mask, cfg.controller, k)
            blocked = 0
        except NoFreePassage:
            blocked += 1
            cmd = STOP
        traj.append((state.t, state.x, state.y, state.yaw))
        cmds.append(cmd)
        tick += 1
        if blocked >= patience:
            outcome = Outcome.BLOCKED
            break
        for _ in range(substeps):
            over = bumpy.shape[0] and k.disc_hits(state.x, state.y, cfg.rover_radius, _NO_PLANTS, bumpy)
            try:
                state = step(state, cmd, cfg.dt, hf, cfg.drift_sigma, drift,
                             cfg.obstacle_bump if over else 0.0)
            except OutOfBounds:
                outcome = Outcome.COLLISION
                break
            if k.disc_hits(state.x, state.y, cfg.rover_radius, fp, blocking):
                outcome = Outcome.COLLISION
                break
            if math.hypot(state.x - goal[0], state.y - goal[1]) <= cfg.goal_radius:
                outcome = Outcome.GOAL_REACHED
                break

    if traj:
        try:
            metrics = trajectory_metrics(traj, cmds, seg, goal, outcome.value)
        except GoalBehind:
            e = [cross_track_error(p[1:3], seg) for p in traj]
            metrics = MetricsRecord(math.nan, float(np.mean(np.abs(e))), float(np.mean(np.square(e))),
                                    float(np.std([c.omega_z for c in cmds])), outcome.value, len(traj))
    else:
        metrics = MetricsRecord(math.nan, math.nan, math.nan, math.nan, outcome.value, 0)
    return EpisodeReport(
        trajectory=tuple(traj),
        commands=tuple(cmds),
        outcome=outcome,
        metrics=metrics,
        seed=cfg.seed,
        config=cfg,
        corridor_index=ci,
        goal=goal,
        final_state=state,
        final_cross_track=cross_track_error((state.x, state.y), seg),
        cross_track=tuple(cross_track_error(p[1:3], seg) for p in traj),
    )
