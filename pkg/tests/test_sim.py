import math
from dataclasses import replace

import numpy as np
import pytest

from rowbench import kernels
from rowbench.controller import Command
from rowbench.errors import InvalidParams, OutOfBounds
from rowbench.field_gen import TerrainSpec, generate_field, preset
from rowbench.mask_oracle import CorruptionParams
from rowbench.sim import (EpisodeConfig, Outcome, RoverState, check_collision, run_episode, step,
                          wrap_angle)
from rowbench.terrain import generate_heightfield, height_at

FLAT = generate_heightfield(TerrainSpec(20, 10, 0.0), 0)


def _state(x=5.0, y=5.0, yaw=0.0):
    return RoverState(x, y, 0.0, yaw, 0.0)


def test_step_straight():
    s = step(_state(), Command(1.0, 0.0), 0.1, FLAT, 0.3, np.random.default_rng(0))
    assert (s.x, s.y, s.yaw, s.t) == (5.1, 5.0, 0.0, 0.1)


def test_step_turn_in_place():
    s = step(_state(), Command(0.0, math.pi), 1.0, FLAT, 0.3, np.random.default_rng(0))
    assert (s.x, s.y) == (5.0, 5.0) and s.yaw == pytest.approx(math.pi)


def test_zero_drift_matches_flat_kinematics():
    rough = generate_heightfield(TerrainSpec(20, 10, 0.3), 4)
    a, b = _state(), _state()
    ra, rb = np.random.default_rng(1), np.random.default_rng(2)
    for k in range(50):
        cmd = Command(0.5, 0.3 * math.sin(k))
        a = step(a, cmd, 0.05, rough, 0.0, ra)
        b = step(b, cmd, 0.05, FLAT, 0.0, rb)
        assert (a.x, a.y, a.yaw) == (b.x, b.y, b.yaw)
        assert a.z == height_at(rough, a.x, a.y)


def test_drift_scales_with_gradient():
    slope = generate_heightfield(TerrainSpec(20, 10, 0.0, slope=0.2), 0)
    yaws = [step(_state(), Command(0.0, 0.0), 1.0, slope, 0.3, np.random.default_rng(k)).yaw
            for k in range(4000)]
    assert np.std(yaws) == pytest.approx(0.3 * 0.2, rel=0.05)


def test_step_out_of_bounds():
    with pytest.raises(OutOfBounds):
        step(_state(x=19.99), Command(0.5, 0.0), 0.1, FLAT, 0.0, np.random.default_rng(0))


@pytest.mark.parametrize("a, expected", [(math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi),
                                         (0.5, 0.5), (-0.5, -0.5), (2 * math.pi + 0.1, 0.1)])
def test_wrap_angle(a, expected):
    assert wrap_angle(a) == pytest.approx(expected, abs=1e-12)
    assert -math.pi < wrap_angle(a) <= math.pi


def test_collision_examples(backend):
    lay = generate_field(replace(preset("zucchini"), plant_jitter=0.0, obstacle_density=0.0), 0)
    c = lay.corridor_centerlines[0]
    assert not check_collision(RoverState(c.start[0] + 5, c.start[1], 0, 0), lay, 0.30, backend=backend)
    p = lay.plants[10]
    assert check_collision(RoverState(p.x, p.y, 0, 0), lay, 0.30, backend=backend)
    empty = lay.without_plants()
    assert not check_collision(RoverState(p.x, p.y, 0, 0), empty, 0.30, backend=backend)


def test_collision_with_obstacles_optional():
    lay = generate_field(replace(preset("zucchini"), obstacle_density=0.05), 0)
    o = lay.obstacles[0]
    s = RoverState(o.x, o.y, 0, 0)
    assert check_collision(s, lay, 0.3)
    hit_plant = check_collision(s, lay, 0.3, include_obstacles=False)
    assert hit_plant == check_collision(s, replace(lay, obstacles=()), 0.3)


def _flat_zucchini(**kw):
    p = preset("zucchini")
    p = replace(p, terrain=replace(p.terrain, delta_h=0.0))
    return EpisodeConfig(field=p, **kw)


def test_centred_flat_episode():
    rep = run_episode(_flat_zucchini())
    assert rep.outcome is Outcome.GOAL_REACHED
    assert max(abs(e) for e in rep.cross_track) <= 0.05
    assert len(rep.trajectory) == len(rep.commands)


def test_empty_field_runs_straight():
    rep = run_episode(_flat_zucchini(empty_field=True, drift_sigma=0.0))
    assert rep.outcome is Outcome.GOAL_REACHED
    assert all(c == Command(0.5, 0.0) for c in rep.commands)
    assert max(abs(e) for e in rep.cross_track) < 1e-9


def test_episode_deterministic_and_backend_independent():
    cfg = EpisodeConfig(field=preset("lettuce"), seed=3, path_length=6.0,
                        corruption=CorruptionParams(flip_prob=0.02))
    a = run_episode(cfg)
    assert a == run_episode(cfg)
    if "numba" in kernels.available_backends():
        b = run_episode(cfg, kernels.get_backend("numpy"))
        assert a.trajectory == b.trajectory and a.commands == b.commands


def test_commands_respect_caps_and_hold():
    rep = run_episode(EpisodeConfig(field=preset("chard"), seed=1, start_lateral_offset=0.2, path_length=10))
    assert all(0 <= c.v_x <= 0.5 and abs(c.omega_z) <= 1.0 for c in rep.commands)
    ts = [t for t, *_ in rep.trajectory]
    assert np.allclose(np.diff(ts), 0.1)


def test_blocked_when_wall_ahead():
    # a plant row straight across the path of a narrow camera: every column occupied
    p = preset("vineyard")
    cfg = EpisodeConfig(field=p, seed=0, start_yaw_offset=math.pi / 2, drift_sigma=0.0)
    rep = run_episode(cfg)
    assert rep.outcome in (Outcome.BLOCKED, Outcome.COLLISION)
    if rep.outcome is Outcome.BLOCKED:
        assert rep.commands[-5:] == (Command(0.0, 0.0),) * 5


def test_timeout():
    rep = run_episode(_flat_zucchini(timeout=1.0))
    assert rep.outcome is Outcome.TIMEOUT
    assert len(rep.commands) == 10


def test_start_in_collision():
    rep = run_episode(_flat_zucchini(corridor_index=0, start_lateral_offset=0.6))
    assert rep.outcome is Outcome.COLLISION and rep.trajectory == ()


def test_obstacle_modes():
    base = EpisodeConfig(field=replace(preset("zucchini"), obstacle_density=0.2), seed=2)
    collide = run_episode(replace(base, obstacle_mode="collide"))
    drift = run_episode(base)
    assert collide.outcome is Outcome.COLLISION
    assert drift.outcome is not Outcome.COLLISION or drift.final_state != collide.final_state


@pytest.mark.parametrize("kw", [dict(dt=0.2), dict(dt=0.03), dict(goal_radius=0.0), dict(path_length=61.0),
                                dict(timeout=0.0), dict(obstacle_mode="bounce"), dict(drift_sigma=-1.0)])
def test_invalid_config(kw):
    with pytest.raises(InvalidParams):
        run_episode(EpisodeConfig(field=preset("zucchini"), **kw))


def test_invalid_corridor():
    with pytest.raises(InvalidParams):
        run_episode(EpisodeConfig(field=preset("zucchini"), corridor_index=6))
