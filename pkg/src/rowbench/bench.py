"""Run an episode matrix and write reports, trajectories and a summary table."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import kernels
from .config import RunConfig
from .export import ManifestWriter, dumps_json, error_doc, report_doc, trajectory_csv
from .sim import run_episode

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("crop", "seed", "outcome", "cha_rad", "mae_m", "mse_m2", "omega_std_rad_s", "wall_time_s")


@dataclass(frozen=True)
class SummaryRow:
    crop: str
    seed: int
    disturbance: str
    outcome: str
    cha: float
    mae: float
    mse: float
    omega_std: float
    wall_time: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome != "Error"


def _stem(crop: str, seed: int, disturbance: str) -> str:
    return f"{crop}_s{seed:06d}" + (f"_{disturbance}" if disturbance else "")


def _run_cell(cell, backend):
    crop, seed, dname, ep = cell
    t0 = time.perf_counter()
    try:
        rep = run_episode(ep, backend)
    except Exception as exc:  # recorded per row; the matrix keeps going
        log.warning("episode %s seed %s failed: %s", crop, seed, exc)
        return cell, None, exc, time.perf_counter() - t0
    return cell, rep, None, time.perf_counter() - t0


def _fmt(v: float) -> str:
    return "" if v != v else repr(float(v))


def summary_csv(rows: list[SummaryRow], with_disturbance: bool) -> bytes:
    cols = list(SUMMARY_COLUMNS)
    if with_disturbance:
        cols.insert(2, "disturbance")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        vals = [r.crop, r.seed] + ([r.disturbance] if with_disturbance else []) + [
            r.outcome, _fmt(r.cha), _fmt(r.mae), _fmt(r.mse), _fmt(r.omega_std), f"{r.wall_time:.6f}"]
        w.writerow(vals)
    return buf.getvalue().encode("ascii")


def bench(cfg: RunConfig, workers: int = 1, backend=None, out_dir=None) -> list[SummaryRow]:
    """Run every (crop, seed, disturbance) cell and write the results.

    Layout under the output directory: ``reports/<crop>_s<seed>.json``,
    ``trajectories/<crop>_s<seed>.csv``, ``summary.csv`` and
    ``manifest.json``. Rows come back sorted by (crop, seed).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    k = backend or kernels.get_backend()
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    cells = cfg.matrix()
    if workers == 1:
        results = [_run_cell(c, k) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_cell(c, k), cells))

    m = ManifestWriter(out, "bench")
    rows = []
    for (crop, seed, dname, ep), rep, exc, wall in results:
        stem = _stem(crop, seed, dname)
        if rep is None:
            m.put(f"reports/{stem}.json", dumps_json(error_doc(crop, seed, dname, exc)))
            nan = float("nan")
            rows.append(SummaryRow(crop, seed, dname, "Error", nan, nan, nan, nan, wall,
                                   f"{type(exc).__name__}: {exc}"))
            continue
        traj = f"trajectories/{stem}.csv"
        m.put(traj, trajectory_csv(rep))
        m.put(f"reports/{stem}.json", dumps_json(report_doc(rep, crop, dname, traj)))
        met = rep.metrics
        rows.append(SummaryRow(crop, seed, dname, rep.outcome.value, met.cha, met.mae, met.mse,
                               met.omega_std, wall))
    m.put("summary.csv", summary_csv(rows, bool(cfg.disturbances)))
    m.extra = {"episodes": len(rows), "backend": kernels.backend_name(k),
               "config": cfg.to_plain()}
    m.close()
    return rows
