"""Command-line entry point: ``rowbench <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import kernels
from .bench import bench
from .config import EpisodeSettings, load_config, with_output_dir
from .controller import ControllerConfig, control_command, find_free_cluster, column_histogram
from .errors import ConfigError, NoFreePassage, RowBenchError, UnknownPreset
from .export import (ManifestWriter, camera_sweep, dumps_json, export_dataset, export_world,
                     read_mask_png, report_doc, trajectory_csv, world_doc)
from .field_gen import PRESET_NAMES, FieldParams, generate_field, preset
from .mask_oracle import CorruptionParams
from .metrics import iou, pixel_accuracy, seg_loss
from .serialize import to_plain
from .sim import build_world, run_episode
from .terrain import generate_heightfield

log = logging.getLogger("rowbench")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def table_row(p: FieldParams) -> dict:
    """The ten geometric numbers that define a crop field, in table order."""
    return {
        "terrain_length": p.terrain.length,
        "terrain_width": p.terrain.width,
        "delta_h": p.terrain.delta_h,
        "plant_length": p.plant.length,
        "plant_width": p.plant.width,
        "plant_height": p.plant.height,
        "d_rr": p.row_spacing,
        "d_RR": p.group_spacing,
        "d_pp": p.plant_spacing,
        "rows": p.num_rows,
    }


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(to_plain(doc), indent=2) + "\n")


def _field_params(args) -> FieldParams:
    p = preset(args.crop)
    if args.scale is not None:
        p = replace(p, scale=args.scale)
    if args.jitter is not None:
        p = replace(p, plant_jitter=args.jitter)
    if args.obstacle_density is not None:
        p = replace(p, obstacle_density=args.obstacle_density)
    if args.delta_h is not None:
        p = replace(p, terrain=replace(p.terrain, delta_h=args.delta_h))
    p.validate()
    return p


def _world(args):
    layout = generate_field(_field_params(args), args.seed)
    return layout, generate_heightfield(layout.terrain, args.seed)


def cmd_preset(args) -> int:
    if args.action == "list":
        for name in PRESET_NAMES:
            print(name)
        return EXIT_OK
    p = preset(args.name)
    _emit({"crop": p.crop_name, **table_row(p), "rows_per_group": p.rows_per_group,
           "row_length": p.row_length, "plant_shape": p.plant.shape,
           "trunk_radius": p.plant.trunk_radius, "trunk_height": p.plant.trunk_height,
           "plant_jitter": p.plant_jitter, "obstacle_density": p.obstacle_density,
           "grid_resolution": p.terrain.grid_resolution, "slope": p.terrain.slope, "scale": p.scale,
           "measured": p.crop_name != "vineyard"})
    return EXIT_OK


def cmd_generate(args) -> int:
    layout, hf = _world(args)
    m = ManifestWriter(args.out, "world")
    m.put("world.json", dumps_json(world_doc(layout, hf)))
    m.close()
    _emit({"crop": layout.params.crop_name, "seed": layout.seed, "plants": len(layout.plants),
           "obstacles": len(layout.obstacles), "rows": len(layout.row_centerlines),
           "corridors": len(layout.corridor_centerlines), "out": str(args.out)})
    return EXIT_OK


def cmd_export_world(args) -> int:
    layout, hf = _world(args)
    m = export_world(layout, hf, args.out)
    _emit({k: v for k, v in m.items() if k != "files"} | {"files": len(m["files"])})
    return EXIT_OK


def cmd_export_dataset(args) -> int:
    layout, hf = _world(args)
    cams = camera_sweep(layout, hf, args.count, args.sweep_seed)
    m = export_dataset(layout, hf, cams, args.out, kernels.get_backend(args.backend))
    _emit({k: v for k, v in m.items() if k != "files"} | {"files": len(m["files"])})
    return EXIT_OK


def cmd_run(args) -> int:
    settings = EpisodeSettings()
    params = None
    if args.config:
        cfg = load_config(args.config)
        settings = cfg.episode
        params = next((c for c in cfg.crops if c.crop_name == args.crop), None)
    if params is None:
        params = _field_params(args)
    overrides = {}
    if args.offset is not None:
        overrides["start_lateral_offset"] = args.offset
    if args.yaw_offset is not None:
        overrides["start_yaw_offset"] = args.yaw_offset
    if args.drift_sigma is not None:
        overrides["drift_sigma"] = args.drift_sigma
    if args.path_length is not None:
        overrides["path_length"] = args.path_length
    if args.corridor is not None:
        overrides["corridor_index"] = args.corridor
    if args.flip_prob is not None:
        overrides["corruption"] = CorruptionParams(flip_prob=args.flip_prob)
    ep = replace(settings, **overrides).episode(params, args.seed)
    rep = run_episode(ep, kernels.get_backend(args.backend), build_world(ep))
    if args.out:
        m = ManifestWriter(args.out, "run")
        m.put("trajectory.csv", trajectory_csv(rep))
        m.put("report.json", dumps_json(report_doc(rep, params.crop_name, "", "trajectory.csv")))
        m.close()
    met = rep.metrics
    _emit({"crop": params.crop_name, "seed": rep.seed, "outcome": rep.outcome.value,
           "cha": met.cha, "mae": met.mae, "mse": met.mse, "omega_std": met.omega_std,
           "ticks": len(rep.trajectory), "final_cross_track": rep.final_cross_track})
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg = with_output_dir(cfg, args.out)
    rows = bench(cfg, workers=args.workers, backend=kernels.get_backend(args.backend))
    for r in rows:
        tail = f"  {r.error}" if r.error else ""
        print(f"{r.crop:<12} seed={r.seed:<6} {r.disturbance + ' ' if r.disturbance else ''}"
              f"{r.outcome:<12} mae={r.mae:.4f} cha={r.cha:+.4f}{tail}")
    print(f"wrote {len(rows)} episodes to {cfg.output_dir}")
    return EXIT_OK if all(r.ok for r in rows) else EXIT_FAIL


def cmd_score(args) -> int:
    pred_dir, truth_dir = Path(args.pred), Path(args.truth)
    names = sorted(p.name for p in truth_dir.glob("mask_*.png"))
    missing = [n for n in names if not (pred_dir / n).is_file()]
    extra = sorted(p.name for p in pred_dir.glob("mask_*.png") if not (truth_dir / p.name).is_file())
    if missing or extra:
        print(f"mask sets differ: missing {missing[:5]} extra {extra[:5]}", file=sys.stderr)
        return EXIT_FAIL
    pred = [read_mask_png(pred_dir / n) for n in names]
    truth = [read_mask_png(truth_dir / n) for n in names]
    per = [{"mask": n, "iou": iou(p, t), "pixel_accuracy": pixel_accuracy(p, t)}
           for n, p, t in zip(names, pred, truth)]
    doc = {"count": len(names), "seg_loss": seg_loss(pred, truth),
           "mean_iou": sum(r["iou"] for r in per) / len(per),
           "mean_pixel_accuracy": sum(r["pixel_accuracy"] for r in per) / len(per)}
    if args.per_mask:
        doc["masks"] = per
    _emit(doc)
    return EXIT_OK


def cmd_ctl_eval(args) -> int:
    mask = read_mask_png(args.mask)
    k = kernels.get_backend(args.backend)
    cfg = ControllerConfig()
    hist = column_histogram(mask, k)
    threshold = int(cfg.free_threshold_frac * mask.height_px)
    cluster = find_free_cluster(hist, threshold, k)
    try:
        cmd = control_command(mask, cfg, k)
        doc = {"v_x": cmd.v_x, "omega_z": cmd.omega_z}
    except NoFreePassage:
        doc = {"v_x": 0.0, "omega_z": 0.0, "no_free_passage": True}
    _emit({**doc, "cluster": list(cluster) if cluster else None, "threshold": threshold,
           "width": mask.width_px, "height": mask.height_px})
    return EXIT_OK


def _add_field_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--crop", required=True, help=f"one of {', '.join(PRESET_NAMES)} (or an inline crop with run --config)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float)
    p.add_argument("--jitter", type=float, help="plant position noise std [m]")
    p.add_argument("--obstacle-density", type=float, help="obstacles per square meter")
    p.add_argument("--delta-h", type=float, help="terrain irregularity override [m]")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rowbench", description=__doc__)
    ap.add_argument("--backend", choices=("numba", "numpy"),
                    help=f"kernel backend (default: ${kernels.BACKEND_ENV} or numba)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preset", help="list crop presets or show one")
    psub = p.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("name", choices=PRESET_NAMES)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("generate", help="generate a field layout and write world.json")
    _add_field_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export-world", help="write terrain/plant OBJ meshes and world.json")
    _add_field_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_export_world)

    p = sub.add_parser("export-dataset", help="render masks from a random camera sweep")
    _add_field_args(p)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--sweep-seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_export_dataset)

    p = sub.add_parser("run", help="run one episode")
    _add_field_args(p)
    p.add_argument("--config", type=Path, help="take episode settings (and inline crops) from a run config")
    p.add_argument("--offset", type=float, help="start lateral offset [m], positive left")
    p.add_argument("--yaw-offset", type=float, help="start yaw offset [rad]")
    p.add_argument("--drift-sigma", type=float)
    p.add_argument("--path-length", type=float)
    p.add_argument("--corridor", type=int)
    p.add_argument("--flip-prob", type=float, help="mask pixel flip probability")
    p.add_argument("--out", type=Path, help="write report.json and trajectory.csv here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run a benchmark matrix from a config file")
    p.add_argument("config", type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, help="override output_dir from the config")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("score", help="IoU and pixel accuracy between two mask directories")
    p.add_argument("pred", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--per-mask", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ctl-eval", help="velocity command for one mask PNG")
    p.add_argument("mask", type=Path)
    p.set_defaults(func=cmd_ctl_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownPreset as exc:
        print(f"unknown crop {exc.args[0]!r}; presets: {', '.join(PRESET_NAMES)}", file=sys.stderr)
        return EXIT_USAGE
    except (RowBenchError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
