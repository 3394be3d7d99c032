import json
import math
from dataclasses import replace

import numpy as np
import pytest

from rowbench.errors import InvalidParams, InvalidPose
from rowbench.export import (MASK_ENCODING, TRAJECTORY_COLUMNS, camera_from_doc, camera_sweep, dumps_json,
                             export_dataset, export_world, load_world, mask_png, read_mask_png, read_obj,
                             plants_obj, read_trajectory_csv, terrain_obj, trajectory_csv, verify_manifest)
from rowbench.field_gen import TerrainSpec, generate_field, preset
from rowbench.mask_oracle import CameraModel, Mask, render_mask, scene_primitives
from rowbench.sim import EpisodeConfig, run_episode
from rowbench.terrain import generate_heightfield


@pytest.fixture(scope="module")
def zucchini_world(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    lay = generate_field(preset("zucchini"), 7)
    hf = generate_heightfield(lay.terrain, 7)
    return lay, hf, out, export_world(lay, hf, out)


def test_world_round_trip(zucchini_world):
    lay, hf, out, _ = zucchini_world
    lay2, hf2 = load_world(out / "world.json")
    assert lay2 == lay
    assert np.array_equal(hf2.heights, hf.heights)


def test_world_doc_fields(zucchini_world):
    lay, hf, out, _ = zucchini_world
    doc = json.loads((out / "world.json").read_text())
    assert doc["format"] == "rowbench.world" and doc["mask_encoding"] == MASK_ENCODING
    assert len(doc["plants"]) == len(lay.plants)
    assert doc["terrain"]["nx"] * doc["terrain"]["ny"] == 241 * 153


def test_terrain_obj_strict_parse(zucchini_world):
    lay, hf, out, manifest = zucchini_world
    objs = read_obj(out / "terrain.obj")
    verts, faces = objs["terrain"]
    assert manifest["terrain_vertices"] == len(verts) == 241 * 153
    assert manifest["terrain_triangles"] == len(faces)
    # vertex j*nx+i is grid node (i, j)
    i, j = 17, 33
    v = verts[j * hf.nx + i]
    assert v[0] == pytest.approx(i * hf.dx, abs=1e-6) and v[1] == pytest.approx(j * hf.dy, abs=1e-6)
    assert v[2] == pytest.approx(hf.heights[i, j], abs=1e-6)


def test_terrain_obj_faces_point_up():
    hf = generate_heightfield(TerrainSpec(4.0, 3.0, 0.0), 0)
    verts, faces = read_obj(terrain_obj(hf).decode())["terrain"]
    a, b, c = (verts[faces[:, k]] for k in range(3))
    normals = np.cross(b - a, c - a)
    assert (normals[:, 2] > 0).all()


def test_plants_obj(zucchini_world):
    lay, hf, out, manifest = zucchini_world
    objs = read_obj(out / "plants.obj")
    assert len(objs) == manifest["plant_objects"] == len(lay.plants)
    verts, _ = objs["plant_000000"]
    p = lay.plants[0]
    assert verts[:, 0].mean() == pytest.approx(p.x, abs=1e-3)
    assert verts[:, 1].mean() == pytest.approx(p.y, abs=1e-3)


def test_plants_obj_closed_volume():
    # a crown+trunk plant mesh encloses about the analytic primitive volume
    lay = generate_field(replace(preset("pear"), plant_jitter=0.0), 0)
    lay = replace(lay, plants=lay.plants[:1])
    hf = generate_heightfield(lay.terrain, 0)
    verts, faces = read_obj(plants_obj(lay, hf).decode())["plant_000000"]
    a, b, c = (verts[faces[:, k]] for k in range(3))
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6
    ell, cyl = scene_primitives(lay, hf)
    _, _, _, ax, ay, az = ell[0]
    r, h = cyl[0, 3], cyl[0, 4]
    expected = 4 / 3 * math.pi * ax * ay * az + math.pi * r * r * h
    assert 0.93 * expected < vol < expected


def test_empty_field_has_no_plant_objects(tmp_path):
    lay = generate_field(replace(preset("lettuce"), obstacle_density=0.0), 0).without_plants()
    hf = generate_heightfield(lay.terrain, 0)
    m = export_world(lay, hf, tmp_path)
    assert m["plant_objects"] == 0
    assert read_obj(tmp_path / "plants.obj") == {}


@pytest.mark.parametrize("text", [
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n",          # face outside any object
    "o a\nv 0 0 0\nv 1 0 0\nf 1 2 3\n",              # index out of range
    "o a\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 1\n",   # quad
    "o a\nvn 0 0 1\n",                                # unsupported record
    "o a\nv 0 0\n",                                   # short vertex
    "o a\no a\n",                                     # duplicate object
])
def test_read_obj_rejects(text):
    with pytest.raises(InvalidParams):
        read_obj(text)


def test_world_export_is_deterministic(tmp_path):
    lay = generate_field(preset("chard"), 3)
    hf = generate_heightfield(lay.terrain, 3)
    export_world(lay, hf, tmp_path / "a")
    export_world(lay, hf, tmp_path / "b")
    for name in ("terrain.obj", "plants.obj", "world.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_detects_tampering(zucchini_world, tmp_path):
    lay, hf, _, _ = zucchini_world
    export_world(lay, hf, tmp_path)
    assert verify_manifest(tmp_path) == []
    with open(tmp_path / "world.json", "ab") as fh:
        fh.write(b" ")
    assert verify_manifest(tmp_path) == ["world.json"]


def test_dataset(tmp_path, backend):
    lay = generate_field(preset("lettuce"), 1)
    hf = generate_heightfield(lay.terrain, 1)
    cams = camera_sweep(lay, hf, 5, seed=9)
    assert cams == camera_sweep(lay, hf, 5, seed=9)
    m = export_dataset(lay, hf, cams, tmp_path, backend)
    assert m["poses"] == 5 and verify_manifest(tmp_path) == []
    for i, cam in enumerate(cams):
        pose = json.loads((tmp_path / f"pose_{i:06d}.json").read_text())
        assert pose["mask"] == f"mask_{i:06d}.png"
        cam2 = camera_from_doc(pose["camera"])
        assert cam2 == cam
        assert read_mask_png(tmp_path / pose["mask"]) == render_mask(cam, lay, hf, backend)


def test_dataset_sky_mask_all_zero(tmp_path):
    lay = generate_field(preset("lettuce"), 1)
    hf = generate_heightfield(lay.terrain, 1)
    x, y = 30.0, lay.corridor_centerlines[0].start[1]
    cam = CameraModel(position=(x, y, 1.0), yaw=0.0, pitch=-1.2)
    export_dataset(lay, hf, [cam], tmp_path)
    assert not read_mask_png(tmp_path / "mask_000000.png").pixels.any()


def test_dataset_invalid_pose_index(tmp_path):
    lay = generate_field(preset("lettuce"), 1)
    hf = generate_heightfield(lay.terrain, 1)
    cams = camera_sweep(lay, hf, 3, seed=0)
    cams[2] = replace(cams[2], position=(cams[2].position[0], cams[2].position[1], -5.0))
    with pytest.raises(InvalidPose) as err:
        export_dataset(lay, hf, cams, tmp_path)
    assert err.value.index == 2
    assert not (tmp_path / "mask_000000.png").exists()


def test_png_values(tmp_path):
    px = np.zeros((4, 6), bool)
    px[1, 2] = px[3, 5] = True
    p = tmp_path / "m.png"
    p.write_bytes(mask_png(Mask(px)))
    from PIL import Image
    raw = np.asarray(Image.open(p))
    assert raw.dtype == np.uint8 and set(np.unique(raw)) == {0, 255}
    assert read_mask_png(p) == Mask(px)
    Image.fromarray(np.full((2, 2), 7, np.uint8)).save(tmp_path / "bad.png")
    with pytest.raises(InvalidParams):
        read_mask_png(tmp_path / "bad.png")


def test_trajectory_csv_round_trip(tmp_path):
    rep = run_episode(EpisodeConfig(field=preset("zucchini"), seed=0, path_length=3.0))
    data = trajectory_csv(rep)
    assert data.splitlines()[0] == b"t,x,y,yaw,v_cmd,omega_cmd,e_ct"
    p = tmp_path / "t.csv"
    p.write_bytes(data)
    arr = read_trajectory_csv(p)
    assert arr.shape == (len(rep.trajectory), len(TRAJECTORY_COLUMNS))
    assert arr[:, :4].tolist() == [list(s) for s in rep.trajectory]
    assert arr[:, 5].tolist() == [c.omega_z for c in rep.commands]
    assert arr[:, 6].tolist() == list(rep.cross_track)


def test_dumps_json():
    assert dumps_json({"x": float("nan"), "y": (1, 2)}) == b'{\n  "x": null,\n  "y": [\n    1,\n    2\n  ]\n}\n'
    with pytest.raises(ValueError):
        dumps_json({"x": float("inf")})
