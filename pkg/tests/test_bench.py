import csv
import json

import pytest

import rowbench.bench as bench_mod
from rowbench.bench import SUMMARY_COLUMNS, bench
from rowbench.config import loads_config
from rowbench.errors import ConfigError, OutOfBounds
from rowbench.export import verify_manifest

CONFIG = """\
schema_version: 1
seeds: [0, 1, 2]
crops: [zucchini, lettuce, chard, pear, vineyard]
episode: {path_length: 4.0}
"""


def _summary(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fifteen_episodes(tmp_path):
    rows = bench(loads_config(CONFIG), workers=2, out_dir=tmp_path)
    assert len(rows) == 15
    assert [(r.crop, r.seed) for r in rows] == sorted((r.crop, r.seed) for r in rows)
    table = _summary(tmp_path / "summary.csv")
    assert tuple(table[0]) == SUMMARY_COLUMNS and len(table) == 15
    assert verify_manifest(tmp_path) == []
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["episodes"] == 15 and len(m["files"]) == 31
    rep = json.loads((tmp_path / "reports" / "lettuce_s000001.json").read_text())
    assert rep["trajectory"] == "trajectories/lettuce_s000001.csv"
    assert "wall" not in json.dumps(rep)


def test_workers_do_not_change_results(tmp_path):
    cfg = loads_config(CONFIG.replace("[0, 1, 2]", "[5]"))
    bench(cfg, workers=1, out_dir=tmp_path / "a")
    bench(cfg, workers=4, out_dir=tmp_path / "b")
    for sub in ("reports", "trajectories"):
        for f in sorted((tmp_path / "a" / sub).iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / sub / f.name).read_bytes()
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rows]
    assert strip(_summary(tmp_path / "a" / "summary.csv")) == strip(_summary(tmp_path / "b" / "summary.csv"))


def test_disturbance_column(tmp_path):
    cfg = loads_config(CONFIG.replace("[0, 1, 2]", "[0]").replace(
        "[zucchini, lettuce, chard, pear, vineyard]", "[zucchini]")
        + "disturbances:\n  - {name: base}\n  - {name: offset, start_lateral_offset: 0.2}\n")
    rows = bench(cfg, out_dir=tmp_path)
    assert [r.disturbance for r in rows] == ["base", "offset"]
    assert list(_summary(tmp_path / "summary.csv")[0])[:3] == ["crop", "seed", "disturbance"]
    assert (tmp_path / "reports" / "zucchini_s000000_offset.json").is_file()


def test_unknown_crop_rejected_before_running(tmp_path, monkeypatch):
    calls = []
    monkeypatch.setattr(bench_mod, "run_episode", lambda *a: calls.append(a))
    with pytest.raises(ConfigError, match="unknown crop 'potato'"):
        bench(loads_config(CONFIG.replace("pear", "potato")), out_dir=tmp_path)
    assert calls == [] and not any(tmp_path.iterdir())


def test_failed_episode_is_recorded(tmp_path, monkeypatch):
    real = bench_mod.run_episode

    def flaky(ep, backend=None):
        if ep.seed == 1:
            raise OutOfBounds("left the field")
        return real(ep, backend)

    monkeypatch.setattr(bench_mod, "run_episode", flaky)
    cfg = loads_config(CONFIG.replace("chard, pear, vineyard", "chard"))
    rows = bench(cfg, workers=3, out_dir=tmp_path)
    bad = [r for r in rows if not r.ok]
    assert [(r.crop, r.seed) for r in bad] == [("chard", 1), ("lettuce", 1), ("zucchini", 1)]
    assert "OutOfBounds" in bad[0].error
    doc = json.loads((tmp_path / "reports" / "chard_s000001.json").read_text())
    assert doc["outcome"] == "Error" and "left the field" in doc["error"]
    assert not (tmp_path / "trajectories" / "chard_s000001.csv").exists()
    table = _summary(tmp_path / "summary.csv")
    assert [r["outcome"] for r in table].count("Error") == 3
    assert table[1]["mae_m"] == ""


def test_workers_validated(tmp_path):
    with pytest.raises(ValueError):
        bench(loads_config(CONFIG), workers=0, out_dir=tmp_path)
