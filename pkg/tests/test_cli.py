"""CLI surface: subcommands, exit codes, config precedence, determinism."""

import csv
import json

import numpy as np
import pytest
from PIL import Image

from fovsearch import random_scene, save_scene
from fovsearch.cli import main


@pytest.fixture
def scene_dir(tmp_path):
    d = tmp_path / "scenes"
    d.mkdir()
    for i in range(5):
        scene = random_scene(100, f"scene_{i:03d}")
        save_scene(d / f"scene_{i:03d}.json", scene)
    return d


@pytest.fixture
def image_path(tmp_path):
    rng = np.random.default_rng(1)
    arr = rng.integers(0, 256, (1050, 1680), dtype=np.uint8)
    path = tmp_path / "scene.png"
    Image.fromarray(arr).save(path)
    return path


class TestFoveate:
    def test_preset_4x160_emits_four_layers(self, image_path, tmp_path):
        out = tmp_path / "layers"
        rc = main(["foveate", "--image", str(image_path), "--focal", "840,525",
                   "--preset", "4x160", "--out", str(out)])
        assert rc == 0
        files = sorted(p.name for p in out.glob("layer_*.png"))
        assert files == ["layer_1.png", "layer_2.png", "layer_3.png", "layer_4.png"]
        for f in files:
            assert Image.open(out / f).size == (160, 160)

    def test_preset_3x256_outermost_covers_1024(self, image_path, tmp_path):
        out = tmp_path / "layers"
        rc = main(["foveate", "--image", str(image_path), "--focal", "840,525",
                   "--preset", "3x256", "--out", str(out)])
        assert rc == 0
        assert len(list(out.glob("layer_*.png"))) == 3
        doc = json.loads((out / "manifest.json").read_text())
        outermost = doc["layers"][-1]
        assert outermost["side"] == 1024

    def test_out_of_bounds_focal_fails(self, image_path, tmp_path):
        rc = main(["foveate", "--image", str(image_path), "--focal=-1,0",
                   "--preset", "4x160", "--out", str(tmp_path / "x")])
        assert rc == 1

    def test_unreadable_image_fails(self, tmp_path):
        missing = tmp_path / "nope.png"
        rc = main(["foveate", "--image", str(missing), "--focal", "10,10",
                   "--out", str(tmp_path / "x")])
        assert rc == 1


class TestSearch:
    def test_batch_run_and_byte_identical_rerun(self, scene_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            rc = main(["search", "--scenes", str(scene_dir), "--out", str(out),
                       "--seed", "7", "--preset", "4x160"])
            assert rc == 0
        bytes_a = (out_a / "scanpaths.jsonl").read_bytes()
        bytes_b = (out_b / "scanpaths.jsonl").read_bytes()
        assert bytes_a == bytes_b
        assert len(bytes_a.splitlines()) == 5
        summary = json.loads((out_a / "run.json").read_text())
        assert summary["scenes"] == 5
        assert summary["pixel_cost_pct"] == pytest.approx(5.805, abs=5e-3)

    def test_parallel_matches_serial(self, scene_dir, tmp_path):
        serial, parallel = tmp_path / "serial", tmp_path / "par"
        main(["search", "--scenes", str(scene_dir), "--out", str(serial), "--seed", "3"])
        main(["search", "--scenes", str(scene_dir), "--out", str(parallel),
              "--seed", "3", "--jobs", "3"])
        assert (serial / "scanpaths.jsonl").read_bytes() == (parallel / "scanpaths.jsonl").read_bytes()

    def test_empty_scene_dir_fails(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        rc = main(["search", "--scenes", str(empty), "--out", str(tmp_path / "o")])
        assert rc == 1

    def test_malformed_scene_is_skipped_with_partial_exit(self, scene_dir, tmp_path):
        (scene_dir / "broken.json").write_text("{not json")
        rc = main(["search", "--scenes", str(scene_dir), "--out", str(tmp_path / "o"),
                   "--seed", "7"])
        assert rc == 2
        lines = (tmp_path / "o" / "scanpaths.jsonl").read_text().splitlines()
        assert len(lines) == 5

    def test_trace_writes_snapshots(self, scene_dir, tmp_path):
        rc = main(["search", "--scenes", str(scene_dir), "--out", str(tmp_path / "o"),
                   "--seed", "7", "--trace"])
        assert rc == 0
        traces = list((tmp_path / "o" / "traces").glob("*.json"))
        assert len(traces) == 5
        doc = json.loads(traces[0].read_text())
        assert doc["snapshots"][0]["Y"] == 20

    def test_preset_sweep_emits_cost_fields(self, scene_dir, tmp_path):
        expected = {"5x64": 1.161, "4x128": 3.715, "4x160": 5.805, "3x256": 11.146}
        for preset, pct in expected.items():
            out = tmp_path / preset
            rc = main(["search", "--scenes", str(scene_dir), "--out", str(out),
                       "--seed", "7", "--preset", preset])
            assert rc == 0
            summary = json.loads((out / "run.json").read_text())
            assert summary["pixel_cost_pct"] == pytest.approx(pct, abs=5e-3)

    def test_config_file_and_flag_precedence(self, scene_dir, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"preset": "4x128", "seed": 9}))
        out = tmp_path / "o"
        rc = main(["search", "--scenes", str(scene_dir), "--out", str(out),
                   "--config", str(config), "--levels", "3", "--base", "256"])
        assert rc == 0
        summary = json.loads((out / "run.json").read_text())
        # CLI flags beat the config file; the config's seed still applies
        assert summary["levels"] == 3 and summary["base_side"] == 256
        assert summary["seed"] == 9


class TestEval:
    def run_search(self, scene_dir, tmp_path, name, seed):
        out = tmp_path / name
        main(["search", "--scenes", str(scene_dir), "--out", str(out), "--seed", str(seed)])
        return out / "scanpaths.jsonl"

    def read_metrics(self, path):
        with open(path) as fh:
            return {row["metric"]: float(row["mean"]) for row in csv.DictReader(fh)}

    def test_self_comparison_is_perfect(self, scene_dir, tmp_path):
        jsonl = self.run_search(scene_dir, tmp_path, "m", 7)
        rc = main(["eval", "--model", str(jsonl), "--reference", str(jsonl),
                   "--out", str(tmp_path / "ev")])
        assert rc == 0
        means = self.read_metrics(tmp_path / "ev" / "metrics.csv")
        assert means["SS"] == 1.0 and means["SemSS"] == 1.0
        assert means["FED"] == 0.0 and means["SemFED"] == 0.0
        with open(tmp_path / "ev" / "cumulative.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["t"] == "0"

    def test_consistency_mode(self, scene_dir, tmp_path):
        # two seeds play the role of two subjects over the same scenes
        a = self.run_search(scene_dir, tmp_path, "a", 1)
        b = self.run_search(scene_dir, tmp_path, "b", 2)
        cohort = tmp_path / "cohort.jsonl"
        lines = []
        for subject, path in (("s1", a), ("s2", b)):
            for line in path.read_text().splitlines():
                doc = json.loads(line)
                doc["subject"] = subject
                lines.append(json.dumps(doc))
        cohort.write_text("\n".join(lines) + "\n")
        rc = main(["eval", "--reference", str(cohort), "--consistency",
                   "--out", str(tmp_path / "cons")])
        assert rc == 0
        means = self.read_metrics(tmp_path / "cons" / "consistency.csv")
        assert set(means) == {"SS", "FED", "SemSS", "SemFED"}

    def test_disjoint_scene_ids_give_empty_report(self, scene_dir, tmp_path, capsys):
        jsonl = self.run_search(scene_dir, tmp_path, "m", 7)
        other = tmp_path / "other.jsonl"
        lines = []
        for line in jsonl.read_text().splitlines():
            doc = json.loads(line)
            doc["scene_id"] = "different_" + doc["scene_id"]
            lines.append(json.dumps(doc))
        other.write_text("\n".join(lines) + "\n")
        rc = main(["eval", "--model", str(jsonl), "--reference", str(other),
                   "--out", str(tmp_path / "ev")])
        assert rc == 0
        assert "10 scene ids present on one side only" in capsys.readouterr().err

    def test_model_required_without_consistency(self, scene_dir, tmp_path):
        jsonl = self.run_search(scene_dir, tmp_path, "m", 7)
        rc = main(["eval", "--reference", str(jsonl), "--out", str(tmp_path / "ev")])
        assert rc == 1


class TestReport:
    def test_pixel_cost_table_and_notes(self, tmp_path):
        rc = main(["report", "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "pixel_cost.csv") as fh:
            rows = {row["preset"]: row for row in csv.DictReader(fh)}
        assert float(rows["4x160"]["percent"]) == pytest.approx(5.805, abs=5e-3)
        assert float(rows["4x128"]["percent"]) == pytest.approx(3.715, abs=5e-3)
        assert float(rows["3x256"]["percent"]) == pytest.approx(11.146, abs=5e-3)
        assert float(rows["5x64"]["percent"]) == pytest.approx(1.161, abs=5e-3)
        assert "0.01%" in rows["5x64"]["note"]
        assert rows["4x160"]["note"] == ""

    def test_cumulative_curves_from_scanpaths(self, scene_dir, tmp_path):
        out = tmp_path / "run"
        main(["search", "--scenes", str(scene_dir), "--out", str(out), "--seed", "7"])
        rc = main(["report", "--out", str(tmp_path / "rep"),
                   str(out / "scanpaths.jsonl")])
        assert rc == 0
        with open(tmp_path / "rep" / "cumulative_scanpaths.csv") as fh:
            rows = list(csv.DictReader(fh))
        ratios = [float(r["ratio"]) for r in rows]
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))
