import json
import subprocess
import sys

import numpy as np
import pytest

from rowbench.cli import main
from rowbench.export import mask_png, read_obj, verify_manifest
from rowbench.field_gen import PRESET_NAMES
from rowbench.mask_oracle import Mask


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_preset_list(capsys):
    code, out, _ = _run(capsys, "preset", "list")
    assert code == 0 and out.split() == list(PRESET_NAMES)


def test_preset_show(capsys):
    code, out, _ = _run(capsys, "preset", "show", "zucchini")
    doc = json.loads(out)
    assert code == 0
    assert (doc["terrain_length"], doc["terrain_width"], doc["delta_h"]) == (60, 38, 0.2)
    assert (doc["d_rr"], doc["d_RR"], doc["d_pp"], doc["rows"]) == (1.8, 3.6, 0.7, 7)


def test_preset_show_unknown(capsys):
    with pytest.raises(SystemExit) as err:
        main(["preset", "show", "potato"])
    assert err.value.code == 2


def test_unknown_crop_exit_code(capsys, tmp_path):
    code, _, err = _run(capsys, "generate", "--crop", "potato", "--out", tmp_path)
    assert code == 2 and "potato" in err


def test_generate(capsys, tmp_path):
    code, out, _ = _run(capsys, "generate", "--crop", "lettuce", "--seed", 4, "--out", tmp_path)
    assert code == 0 and json.loads(out)["seed"] == 4
    assert verify_manifest(tmp_path) == []
    assert json.loads((tmp_path / "world.json").read_text())["seed"] == 4


def test_invalid_field_override(capsys, tmp_path):
    code, _, err = _run(capsys, "generate", "--crop", "lettuce", "--scale", -1, "--out", tmp_path)
    assert code == 1 and "InvalidParams" in err


def test_export_world(capsys, tmp_path):
    code, out, _ = _run(capsys, "export-world", "--crop", "zucchini", "--out", tmp_path)
    doc = json.loads(out)
    assert code == 0 and doc["terrain_vertices"] == 241 * 153
    assert len(read_obj(tmp_path / "terrain.obj")["terrain"][0]) == 241 * 153


def test_export_dataset_and_score(capsys, tmp_path):
    code, out, _ = _run(capsys, "export-dataset", "--crop", "chard", "--count", 3, "--out", tmp_path / "d")
    assert code == 0 and json.loads(out)["masks"] == 3
    code, out, _ = _run(capsys, "score", tmp_path / "d", tmp_path / "d", "--per-mask")
    doc = json.loads(out)
    assert code == 0 and doc["count"] == 3 and doc["mean_pixel_accuracy"] == 1.0
    assert doc["seg_loss"] == 0.0 and len(doc["masks"]) == 3


def test_score_mismatched_sets(capsys, tmp_path):
    for d, names in (("a", ["mask_000000.png"]), ("b", ["mask_000000.png", "mask_000001.png"])):
        (tmp_path / d).mkdir()
        for n in names:
            (tmp_path / d / n).write_bytes(mask_png(Mask(np.zeros((2, 2), bool))))
    code, _, err = _run(capsys, "score", tmp_path / "a", tmp_path / "b")
    assert code == 1 and "mask_000001.png" in err


def test_run(capsys, tmp_path):
    code, out, _ = _run(capsys, "run", "--crop", "zucchini", "--offset", 0.3, "--path-length", 5,
                        "--out", tmp_path)
    doc = json.loads(out)
    assert code == 0 and doc["outcome"] == "GoalReached"
    head = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert head == "t,x,y,yaw,v_cmd,omega_cmd,e_ct"
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["config"]["start_lateral_offset"] == 0.3


def test_run_with_inline_crop(capsys, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("schema_version: 1\nseeds: [0]\ncrops:\n  - {name: flat, preset: zucchini, "
                   "terrain: {delta_h: 0.0}}\nepisode: {path_length: 3}\n")
    code, out, _ = _run(capsys, "run", "--crop", "flat", "--config", cfg)
    assert code == 0 and json.loads(out)["crop"] == "flat"


def test_bench(capsys, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("schema_version: 1\nseeds: [0, 1]\ncrops: [lettuce]\nepisode: {path_length: 3}\n")
    code, out, _ = _run(capsys, "bench", cfg, "--workers", 2, "--out", tmp_path / "o")
    assert code == 0 and "wrote 2 episodes" in out
    assert (tmp_path / "o" / "summary.csv").is_file()


def test_bench_bad_config(capsys, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("schema_version: 1\nseeds: [0]\ncrops: [lettuce]\nepisod: {}\n")
    code, _, err = _run(capsys, "bench", cfg)
    assert code == 2 and "episod" in err


def test_ctl_eval(capsys, tmp_path):
    px = np.zeros((100, 200), bool)
    px[:, :50] = True
    (tmp_path / "m.png").write_bytes(mask_png(Mask(px)))
    code, out, _ = _run(capsys, "ctl-eval", tmp_path / "m.png")
    doc = json.loads(out)
    # free span 50..199 is centred right of the image centre
    d = ((50 + 199 + 1) / 2 - 100) / 100
    assert code == 0 and doc["cluster"] == [50, 199]
    assert doc["omega_z"] == pytest.approx(max(-1.0, min(1.0, -3 * d)))
    assert doc["v_x"] == pytest.approx(min(0.5, 1 - d * d))


def test_ctl_eval_blocked(capsys, tmp_path):
    (tmp_path / "m.png").write_bytes(mask_png(Mask(np.ones((50, 80), bool))))
    code, out, _ = _run(capsys, "ctl-eval", tmp_path / "m.png")
    doc = json.loads(out)
    assert code == 0 and doc["no_free_passage"] and doc["cluster"] is None


def test_missing_file(capsys, tmp_path):
    code, _, err = _run(capsys, "ctl-eval", tmp_path / "nope.png")
    assert code == 1 and "error" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rowbench", "--backend", "numpy", "preset", "list"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.split() == list(PRESET_NAMES)
