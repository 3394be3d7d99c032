"""Compare the numba kernels with the numpy fallback.

Times mask rendering, the column-histogram/free-cluster step and a full
20 m episode on each backend, and checks that both backends agree bit for
bit. Run with ``python benchmarks/bench_backends.py [--crop zucchini]``.
"""

import argparse
import time

import numpy as np

from rowbench import kernels
from rowbench.field_gen import preset
from rowbench.mask_oracle import render_primitives, rover_camera, scene_primitives
from rowbench.sim import EpisodeConfig, build_world, run_episode
from rowbench.terrain import height_at


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--crop", default="zucchini")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    cfg = EpisodeConfig(field=preset(args.crop), seed=args.seed)
    layout, hf = build_world(cfg)
    ell, cyl = scene_primitives(layout, hf)
    seg = layout.corridor_centerlines[layout.default_corridor(cfg.rover_radius)]
    x, y = seg.point_at(5.0)
    cam = rover_camera(x, y, 0.0, height_at(hf, x, y))

    results = {}
    print(f"{'backend':<8} {'render ms':>10} {'hist+cluster us':>16} {'episode s':>10}")
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        run_episode(cfg, k, (layout, hf))  # warm up (JIT compile or cache load)
        t_render, mask = best_of(lambda: render_primitives(cam, ell, cyl, k), args.repeat)
        t_ctl, run = best_of(lambda: k.free_cluster(k.column_histogram(mask.pixels), 24), args.repeat)
        t_ep, rep = best_of(lambda: run_episode(cfg, k, (layout, hf)), max(1, args.repeat // 2))
        results[name] = (mask, run, rep)
        print(f"{name:<8} {t_render * 1e3:10.3f} {t_ctl * 1e6:16.1f} {t_ep:10.3f}")

    if len(results) == 2:
        (ma, ra, ea), (mb, rb, eb) = results.values()
        same = (np.array_equal(ma.pixels, mb.pixels) and tuple(ra) == tuple(rb)
                and ea.trajectory == eb.trajectory and ea.commands == eb.commands)
        print(f"backends agree: {same}")


if __name__ == "__main__":
    main()
