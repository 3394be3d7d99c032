"""File formats: OBJ meshes, world/pose/report JSON, mask PNG, trajectory CSV, manifests.

Byte layouts are documented in FORMATS.md. Everything written here is a
pure function of its inputs so re-exports are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidParams, InvalidPose, WriteError
from .field_gen import FieldLayout, FieldParams, Obstacle, Plant, PlantSpec, Segment
from .mask_oracle import CameraModel, Mask, check_pose, render_mask, scene_primitives
from .rng import substream
from .serialize import from_plain, to_plain
from .terrain import Heightfield, generate_heightfield, heights_at

FORMAT_VERSION = 1
SPHERE_SEGMENTS = 16
SPHERE_RINGS = 16
CYLINDER_SEGMENTS = 16
MASK_ENCODING = {"plant": 255, "free": 0}
TRAJECTORY_COLUMNS = ("t", "x", "y", "yaw", "v_cmd", "omega_cmd", "e_ct")


def _f(v: float) -> str:
    return f"{v:.6f}"


def _write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def dumps_json(doc) -> bytes:
    """Canonical JSON: two-space indent, insertion order, NaN as null, trailing newline."""
    return (json.dumps(to_plain(doc), indent=2, allow_nan=False) + "\n").encode("utf-8")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ManifestWriter:
    """Writes files under ``root`` and records each one's size and hash."""

    def __init__(self, root, kind: str):
        self.root = Path(root)
        self.kind = kind
        self.files: dict[str, dict] = {}
        self.extra: dict = {}

    def put(self, rel: str, data: bytes) -> None:
        if rel in self.files:
            raise WriteError(f"{rel} written twice")
        _write(self.root / rel, data)
        self.files[rel] = {"sha256": sha256_bytes(data), "bytes": len(data)}

    def manifest(self) -> dict:
        return {
            "format": f"rowbench.manifest.{self.kind}",
            "version": FORMAT_VERSION,
            **self.extra,
            "files": [{"path": k, **v} for k, v in sorted(self.files.items())],
        }

    def close(self, name: str = "manifest.json") -> dict:
        m = self.manifest()
        _write(self.root / name, dumps_json(m))
        return m


def verify_manifest(root, name: str = "manifest.json") -> list[str]:
    """Paths whose hash or size no longer matches the manifest; empty when intact."""
    root = Path(root)
    m = json.loads((root / name).read_text())
    bad = []
    for entry in m["files"]:
        p = root / entry["path"]
        if not p.is_file() or p.stat().st_size != entry["bytes"] or sha256_file(p) != entry["sha256"]:
            bad.append(entry["path"])
    return bad


# -- OBJ ---------------------------------------------------------------------

def terrain_obj(hf: Heightfield) -> bytes:
    """Heightfield as a triangle mesh: vertex ``j * nx + i`` sits at grid node (i, j)."""
    nx, ny = hf.nx, hf.ny
    out = io.StringIO()
    out.write(f"# rowbench terrain {nx}x{ny} vertices, Z up, meters\n")
    out.write("o terrain\n")
    dx, dy = hf.dx, hf.dy
    for j in range(ny):
        y = _f(j * dy)
        for i in range(nx):
            out.write(f"v {_f(i * dx)} {y} {_f(hf.heights[i, j])}\n")
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i + 1
            b, c, d = a + 1, a + nx + 1, a + nx
            out.write(f"f {a} {b} {c}\nf {a} {c} {d}\n")
    return out.getvalue().encode("ascii")


def _unit_sphere() -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    verts = [(0.0, 0.0, 1.0)]
    for r in range(1, SPHERE_RINGS):
        theta = math.pi * r / SPHERE_RINGS
        for s in range(SPHERE_SEGMENTS):
            phi = 2 * math.pi * s / SPHERE_SEGMENTS
            verts.append((math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)))
    verts.append((0.0, 0.0, -1.0))
    n = SPHERE_SEGMENTS
    south = len(verts) - 1
    faces = []

    def ring(r, s):
        return 1 + (r - 1) * n + s % n

    for s in range(n):
        faces.append((0, ring(1, s), ring(1, s + 1)))
    for r in range(1, SPHERE_RINGS - 1):
        for s in range(n):
            a, b = ring(r, s), ring(r, s + 1)
            c, d = ring(r + 1, s + 1), ring(r + 1, s)
            faces += [(a, d, c), (a, c, b)]
    for s in range(n):
        faces.append((south, ring(SPHERE_RINGS - 1, s + 1), ring(SPHERE_RINGS - 1, s)))
    return np.array(verts), faces


def _unit_cylinder() -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    n = CYLINDER_SEGMENTS
    ang = 2 * math.pi * np.arange(n) / n
    ring = np.column_stack([np.cos(ang), np.sin(ang)])
    verts = np.vstack([np.column_stack([ring, np.zeros(n)]), np.column_stack([ring, np.ones(n)]),
                       [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]])
    bottom, top = 2 * n, 2 * n + 1
    faces = []
    for s in range(n):
        t = (s + 1) % n
        faces += [(s, t, n + t), (s, n + t, n + s)]
        faces += [(bottom, t, s), (top, n + s, n + t)]
    return verts, faces


_SPHERE = _unit_sphere()
_CYLINDER = _unit_cylinder()


def plants_obj(layout: FieldLayout, hf: Heightfield) -> bytes:
    """Plant primitives on the terrain; one ``o`` group per plant."""
    ell, cyl = scene_primitives(layout, hf)
    out = io.StringIO()
    out.write(f"# rowbench plants {len(layout.plants)} objects, Z up, meters\n")
    base = 1
    sv, sf = _SPHERE
    cv, cf = _CYLINDER
    ci = 0
    arr = layout.plant_array
    for k in range(ell.shape[0]):
        out.write(f"o plant_{k:06d}\n")
        cx, cy, cz, ax, ay, az = ell[k]
        for x, y, z in sv:
            out.write(f"v {_f(cx + ax * x)} {_f(cy + ay * y)} {_f(cz + az * z)}\n")
        for a, b, c in sf:
            out.write(f"f {a + base} {b + base} {c + base}\n")
        base += len(sv)
        if arr[k, 5] == 1.0:
            bx, by, bz, r, h = cyl[ci]
            ci += 1
            for x, y, z in cv:
                out.write(f"v {_f(bx + r * x)} {_f(by + r * y)} {_f(bz + h * z)}\n")
            for a, b, c in cf:
                out.write(f"f {a + base} {b + base} {c + base}\n")
            base += len(cv)
    return out.getvalue().encode("ascii")


def read_obj(source) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Strict OBJ reader: only ``v x y z``, ``f a b c`` (1-based), ``o name`` and comments.

    Returns ``{object_name: (vertices, faces)}`` with face indices rebased
    to the object's own vertex array. Raises InvalidParams on anything else.
    """
    text = Path(source).read_text(encoding="ascii") if not isinstance(source, (bytes, str)) else (
        source.decode("ascii") if isinstance(source, bytes) else source)
    verts: list[tuple[float, float, float]] = []
    objects: dict[str, list] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "o":
            if len(rest) != 1 or rest[0] in objects:
                raise InvalidParams(f"line {lineno}: bad or duplicate object name")
            current = rest[0]
            objects[current] = [len(verts), len(verts), []]
        elif tag == "v":
            if current is None or len(rest) != 3:
                raise InvalidParams(f"line {lineno}: vertex needs an object and 3 coordinates")
            xyz = tuple(float(t) for t in rest)
            if not all(math.isfinite(c) for c in xyz):
                raise InvalidParams(f"line {lineno}: non-finite coordinate")
            verts.append(xyz)
            objects[current][1] = len(verts)
        elif tag == "f":
            if current is None or len(rest) != 3:
                raise InvalidParams(f"line {lineno}: only triangles are allowed")
            if not all(t.isdigit() for t in rest):
                raise InvalidParams(f"line {lineno}: face indices must be positive integers")
            idx = tuple(int(t) for t in rest)
            lo, hi = objects[current][0], objects[current][1]
            if any(not lo < i <= hi for i in idx) or len(set(idx)) != 3:
                raise InvalidParams(f"line {lineno}: face index outside its object's vertices")
            objects[current][2].append(tuple(i - 1 - lo for i in idx))
        else:
            raise InvalidParams(f"line {lineno}: unsupported statement {tag!r}")
    all_v = np.array(verts, dtype=float).reshape(-1, 3)
    return {name: (all_v[lo:hi], np.array(f, dtype=np.int64).reshape(-1, 3))
            for name, (lo, hi, f) in objects.items()}


# -- world.json --------------------------------------------------------------

def world_doc(layout: FieldLayout, hf: Heightfield) -> dict:
    specs: list[PlantSpec] = []
    index: dict[PlantSpec, int] = {}
    plants = []
    for p in layout.plants:
        if p.spec not in index:
            index[p.spec] = len(specs)
            specs.append(p.spec)
        plants.append([p.x, p.y, index[p.spec]])
    return {
        "format": "rowbench.world",
        "version": FORMAT_VERSION,
        "units": "m",
        "axes": "x along rows, y across rows, z up; right-handed",
        "mask_encoding": MASK_ENCODING,
        "seed": layout.seed,
        "params": to_plain(layout.params),
        "plant_specs": [to_plain(s) for s in specs],
        "plants": plants,
        "obstacles": [[o.x, o.y, o.radius] for o in layout.obstacles],
        "row_centerlines": [[list(s.start), list(s.end)] for s in layout.row_centerlines],
        "corridor_centerlines": [[list(s.start), list(s.end)] for s in layout.corridor_centerlines],
        "corridor_widths": list(layout.corridor_widths),
        "terrain": {
            "spec": to_plain(hf.spec),
            "seed": hf.seed,
            "nx": hf.nx,
            "ny": hf.ny,
            "mesh": "terrain.obj",
        },
    }


def _seg(v) -> Segment:
    (x0, y0), (x1, y1) = v
    return Segment((float(x0), float(y0)), (float(x1), float(y1)))


def layout_from_doc(doc: dict) -> FieldLayout:
    if doc.get("format") != "rowbench.world" or doc.get("version") != FORMAT_VERSION:
        raise InvalidParams("not a version-1 rowbench world document")
    params = from_plain(FieldParams, doc["params"], "params")
    specs = [from_plain(PlantSpec, s, "plant_specs") for s in doc["plant_specs"]]
    return FieldLayout(
        params=params,
        plants=tuple(Plant(float(x), float(y), specs[int(i)]) for x, y, i in doc["plants"]),
        obstacles=tuple(Obstacle(float(x), float(y), float(r)) for x, y, r in doc["obstacles"]),
        row_centerlines=tuple(_seg(s) for s in doc["row_centerlines"]),
        corridor_centerlines=tuple(_seg(s) for s in doc["corridor_centerlines"]),
        seed=int(doc["seed"]),
        corridor_widths=tuple(float(w) for w in doc["corridor_widths"]),
    )


def load_world(path) -> tuple[FieldLayout, Heightfield]:
    """Read world.json back; the heightfield is regenerated from its recorded seed."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    layout = layout_from_doc(doc)
    hf = generate_heightfield(layout.terrain, int(doc["terrain"]["seed"]))
    return layout, hf


def export_world(layout: FieldLayout, hf: Heightfield, out_dir) -> dict:
    """Write terrain.obj, plants.obj, world.json and manifest.json; returns the manifest."""
    m = ManifestWriter(out_dir, "world")
    m.put("terrain.obj", terrain_obj(hf))
    m.put("plants.obj", plants_obj(layout, hf))
    m.put("world.json", dumps_json(world_doc(layout, hf)))
    m.extra = {
        "terrain_vertices": hf.nx * hf.ny,
        "terrain_triangles": 2 * (hf.nx - 1) * (hf.ny - 1),
        "plant_objects": len(layout.plants),
        "obstacles": len(layout.obstacles),
    }
    return m.close()


# -- datasets ----------------------------------------------------------------

def mask_png(mask: Mask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.pixels * np.uint8(255), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def read_mask_png(path) -> Mask:
    with Image.open(path) as im:
        if im.mode != "L":
            raise InvalidParams(f"{path}: expected 8-bit grayscale, got {im.mode}")
        px = np.asarray(im)
    if not np.isin(px, (0, 255)).all():
        raise InvalidParams(f"{path}: pixel values other than 0 and 255")
    return Mask(px == 255)


def camera_doc(cam: CameraModel) -> dict:
    return {**to_plain(cam), "focal_px": cam.focal_px}


def camera_from_doc(doc: dict) -> CameraModel:
    body = {k: v for k, v in doc.items() if k != "focal_px"}
    return from_plain(CameraModel, body, "camera")


def camera_sweep(layout: FieldLayout, hf: Heightfield, count: int, seed: int,
                 mount_height: float = 0.4) -> list[CameraModel]:
    """Random rover-like camera poses inside the corridors.

    Position along a random corridor with lateral jitter inside its free
    width, height ``mount_height`` +/- 0.1 m above ground, yaw within
    0.3 rad of the row direction (either way along it), pitch in
    [0, 0.3] rad, roll within 0.05 rad.
    """
    rng = substream(seed, "sweep")
    n_corr = len(layout.corridor_centerlines)
    if n_corr == 0:
        raise InvalidParams("layout has no corridors")
    out = []
    for _ in range(count):
        ci = int(rng.integers(0, n_corr))
        seg = layout.corridor_centerlines[ci]
        along = float(rng.uniform(0.0, seg.length))
        half = max(layout.clearance(ci), 0.0) if layout.corridor_widths else 0.0
        lat = float(rng.uniform(-half, half))
        x, y = seg.point_at(along)
        y += lat
        x = min(max(x, 0.0), hf.spec.length)
        y = min(max(y, 0.0), hf.spec.width)
        back = bool(rng.integers(0, 2))
        yaw = float(rng.uniform(-0.3, 0.3)) + (math.pi if back else 0.0)
        pitch = float(rng.uniform(0.0, 0.3))
        roll = float(rng.uniform(-0.05, 0.05))
        z = float(heights_at(hf, np.array([[x, y]]))[0]) + mount_height + float(rng.uniform(-0.1, 0.1))
        out.append(CameraModel(position=(x, y, z), yaw=math.atan2(math.sin(yaw), math.cos(yaw)),
                               pitch=pitch, roll=roll))
    return out


def export_dataset(layout: FieldLayout, hf: Heightfield, camera_sweep, out_dir, backend=None) -> dict:
    """Render one mask per camera pose; writes mask/pose pairs and manifest.json.

    Every pose is checked before anything is written; an invalid one raises
    InvalidPose carrying its index.
    """
    poses = list(camera_sweep)
    for i, cam in enumerate(poses):
        try:
            check_pose(cam, hf)
        except InvalidPose as exc:
            raise InvalidPose(str(exc), index=i) from exc
    m = ManifestWriter(out_dir, "dataset")
    for i, cam in enumerate(poses):
        mask = render_mask(cam, layout, hf, backend)
        name = f"mask_{i:06d}.png"
        m.put(name, mask_png(mask))
        m.put(f"pose_{i:06d}.json", dumps_json({
            "format": "rowbench.pose",
            "version": FORMAT_VERSION,
            "index": i,
            "mask": name,
            "mask_encoding": MASK_ENCODING,
            "camera": camera_doc(cam),
        }))
    m.extra = {"poses": len(poses), "masks": len(poses), "world_seed": layout.seed,
               "crop": layout.params.crop_name}
    return m.close()


# -- episode logs ------------------------------------------------------------

def trajectory_csv(report) -> bytes:
    """Control-tick log; floats use the shortest repr that round-trips."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for (t, x, y, yaw), cmd, e in zip(report.trajectory, report.commands, report.cross_track):
        w.writerow([repr(float(v)) for v in (t, x, y, yaw, cmd.v_x, cmd.omega_z, e)])
    return buf.getvalue().encode("ascii")


def read_trajectory_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise InvalidParams(f"{path}: unexpected header")
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(TRAJECTORY_COLUMNS))


def report_doc(report, crop: str, disturbance: str = "", trajectory_file: str | None = None) -> dict:
    """Per-episode report; deliberately free of wall-clock time."""
    met = report.metrics
    s = report.final_state
    cfg = report.config
    return {
        "format": "rowbench.report",
        "version": FORMAT_VERSION,
        "crop": crop,
        "seed": report.seed,
        "disturbance": disturbance,
        "outcome": report.outcome.value,
        "metrics": {"cha": met.cha, "mae": met.mae, "mse": met.mse, "omega_std": met.omega_std,
                    "goal_behind_samples": met.goal_behind},
        "ticks": len(report.trajectory),
        "corridor_index": report.corridor_index,
        "goal": list(report.goal),
        "final_state": {"x": s.x, "y": s.y, "z": s.z, "yaw": s.yaw, "t": s.t},
        "final_cross_track": report.final_cross_track,
        "trajectory": trajectory_file,
        "config": {**{k: v for k, v in to_plain(cfg).items() if k != "field"},
                   "field": to_plain(cfg.field)},
    }


def error_doc(crop: str, seed: int, disturbance: str, exc: BaseException) -> dict:
    return {
        "format": "rowbench.report",
        "version": FORMAT_VERSION,
        "crop": crop,
        "seed": seed,
        "disturbance": disturbance,
        "outcome": "Error",
        "error": f"{type(exc).__name__}: {exc}",
    }
