"""Episode engine: fixation geometry, oracle, loop behavior, persistence."""

import json

import numpy as np

from fovsearch import (
    BBox,
    DetectorModel,
    EpisodeConfig,
    GridGeometry,
    SceneObject,
    SceneSpec,
    cell_center,
    fixated_label,
    load_scanpaths_jsonl,
    oracle_hit,
    random_scene,
    run_episode,
    run_random_episode,
    write_scanpaths_jsonl,
)
from fovsearch.search import Scanpath, scanpath_from_json, scanpath_to_json

GEOM = GridGeometry(20, 32, 1050, 1680)


def scene_with(objects, target, h=1050, w=1680, scene_id="s0"):
    return SceneSpec(
        scene_id=scene_id,
        image_height=h,
        image_width=w,
        target=target,
        objects=tuple(SceneObject(label=l, box=b) for l, b in objects),
    )


def noiseless(seed=0):
    return DetectorModel(
        true_positive_base=1.0,
        degradation_exponent=0.0,
        false_positive_rate=0.0,
        jitter_px=0.0,
        rng_seed=seed,
    )


class TestCellCenter:
    def test_first_cell_on_fractional_extents(self):
        # 52.5px cells: floor(26.25) = 26
        assert cell_center((0, 0), GEOM) == (26, 26)

    def test_last_cell_on_fractional_extents(self):
        assert cell_center((31, 19), GEOM) == (1653, 1023)

    def test_integral_extents(self):
        geom = GridGeometry(20, 32, 1040, 1664)
        assert cell_center((0, 0), geom) == (26, 26)


class TestOracleAndLabels:
    BOX = BBox(100, 200, 300, 400, frame="image")

    def scene(self):
        return scene_with([("cup", self.BOX)], "cup")

    def test_hit_at_box_center(self):
        assert oracle_hit((200, 300), self.scene())

    def test_miss_one_pixel_outside(self):
        assert not oracle_hit((301, 300), self.scene())
        assert not oracle_hit((99, 300), self.scene())

    def test_edge_is_inclusive(self):
        assert oracle_hit((300, 400), self.scene())
        assert oracle_hit((100, 200), self.scene())

    def test_non_target_boxes_do_not_fire(self):
        scene = scene_with([("dog", self.BOX), ("cup", BBox(10, 10, 20, 20, frame="image"))], "cup")
        assert not oracle_hit((200, 300), scene)

    def test_nested_boxes_label_smallest(self):
        scene = scene_with(
            [
                ("dining table", BBox(50, 50, 800, 800, frame="image")),
                ("cup", BBox(300, 300, 380, 380, frame="image")),
                ("cup", BBox(10, 10, 20, 20, frame="image")),
            ],
            "cup",
        )
        assert fixated_label((320, 320), scene) == "cup"
        assert fixated_label((100, 100), scene) == "dining table"
        assert fixated_label((900, 900), scene) == "background"


class TestRunEpisode:
    def test_target_under_start_found_immediately(self):
        scene = scene_with([("cup", BBox(700, 400, 1000, 700, frame="image"))], "cup")
        path = run_episode(scene, EpisodeConfig(detector=noiseless()))
        assert path.found and path.found_at == 0
        assert len(path.fixations) == 1
        assert path.fixations[0].px == (840, 525)
        assert path.fixations[0].label == "cup"

    def test_noiseless_visible_target_found_fast(self):
        # single object, visible in the outer layers from the center; box
        # aligned to whole cells so every boosted cell center lies inside it
        scene = scene_with([("cup", BBox(1050, 210, 1260, 367.5, frame="image"))], "cup")
        path = run_episode(scene, EpisodeConfig(detector=noiseless()))
        assert path.found
        assert path.found_at <= 2

    def test_empty_detection_run_follows_tie_break_order(self):
        # target sits away from the start cell and the row-major tie-break trail
        scene = scene_with([("cup", BBox(1500, 900, 1600, 1000, frame="image"))], "cup")
        cfg = EpisodeConfig(detector=noiseless(), threshold=1.0)
        path = run_episode(scene, cfg)
        assert not path.found
        assert len(path.fixations) == 7
        assert [f.cell for f in path.fixations] == [
            (16, 10), (0, 0), (2, 0), (4, 0), (6, 0), (8, 0), (10, 0)
        ]

    def test_budget_respected(self):
        scene = random_scene(21, "budget")
        for budget in (1, 3, 6):
            cfg = EpisodeConfig(detector=DetectorModel(rng_seed=1), max_fixations=budget)
            path = run_episode(scene, cfg)
            assert len(path.fixations) <= budget + 1

    def test_deterministic_replay(self):
        scene = random_scene(22, "replay")
        cfg = EpisodeConfig(detector=DetectorModel(rng_seed=5))
        assert run_episode(scene, cfg) == run_episode(scene, cfg)

    def test_no_cell_revisited(self):
        for i in range(10):
            scene = random_scene(23, f"revisit{i}")
            path = run_episode(scene, EpisodeConfig(detector=DetectorModel(rng_seed=i)))
            cells = [f.cell for f in path.fixations]
            assert len(cells) == len(set(cells))

    def test_ior_mask_covers_fixated_cells(self):
        scene = random_scene(24, "iormask")
        cfg = EpisodeConfig(detector=DetectorModel(rng_seed=2))
        path, traces = run_episode(scene, cfg, collect_trace=True)
        last = traces[-1]
        ior = np.asarray(last["ior"], dtype=bool).reshape(20, 32)
        for fix in path.fixations:
            cx, cy = fix.cell
            assert ior[max(cy - 1, 0) : cy + 2, max(cx - 1, 0) : cx + 2].all()

    def test_exhaustion_on_tiny_grid(self):
        scene = scene_with(
            [("cup", BBox(2, 2, 12, 12, frame="image"))], "cup", h=100, w=100
        )
        cfg = EpisodeConfig(
            levels=1, base_side=64, grid_shape=(2, 2),
            detector=noiseless(), threshold=1.0,
        )
        path = run_episode(scene, cfg)
        assert not path.found
        assert path.exhausted
        assert len(path.fixations) == 1  # the start fixation inhibits all 4 cells

    def test_confidence_stop_rule_fires_at_tau(self):
        # target visible from the start fixation but not underneath it
        scene = scene_with([("cup", BBox(940, 500, 1100, 660, frame="image"))], "cup")
        base = EpisodeConfig(detector=noiseless())
        _, traces = run_episode(scene, base, collect_trace=True)
        beta0 = np.asarray(traces[0]["beta"]).reshape(20, 32, 80)
        peak = float((beta0[:, :, 41] / beta0.sum(axis=2)).max())  # cup = index 41
        assert peak > 1 / 80
        stopping = EpisodeConfig(detector=noiseless(), confidence_tau=peak * 0.999)
        path = run_episode(scene, stopping)
        assert len(path.fixations) == 1
        assert not path.found
        inert = EpisodeConfig(detector=noiseless(), confidence_tau=min(peak * 10, 1.0))
        assert len(run_episode(scene, inert).fixations) > 1


class TestRandomBaseline:
    def test_deterministic(self):
        scene = random_scene(30, "base")
        cfg = EpisodeConfig()
        assert run_random_episode(scene, cfg, 3) == run_random_episode(scene, cfg, 3)

    def test_budget_and_ior(self):
        scene = random_scene(31, "base2")
        cfg = EpisodeConfig(max_fixations=6)
        for seed in range(20):
            path = run_random_episode(scene, cfg, seed)
            cells = [f.cell for f in path.fixations]
            assert len(cells) <= 7
            assert len(cells) == len(set(cells))

    def test_finds_central_target_immediately(self):
        scene = scene_with([("cup", BBox(700, 400, 1000, 700, frame="image"))], "cup")
        path = run_random_episode(scene, EpisodeConfig(), 0)
        assert path.found and path.found_at == 0


class TestScanpathPersistence:
    def test_jsonl_round_trip(self, tmp_path):
        paths = [
            run_episode(random_scene(40, f"rt{i}"), EpisodeConfig(detector=DetectorModel(rng_seed=i)))
            for i in range(5)
        ]
        out = tmp_path / "paths.jsonl"
        write_scanpaths_jsonl(out, paths)
        assert load_scanpaths_jsonl(out) == paths

    def test_found_at_omitted_when_absent(self):
        doc = scanpath_to_json(
            Scanpath("s", "cup", [], found=False, found_at=None)
        )
        assert "found_at" not in doc
        assert "exhausted" not in doc

    def test_subject_field_round_trip(self):
        path = Scanpath("s", "cup", [], found=False, found_at=None, subject="h3")
        doc = json.loads(json.dumps(scanpath_to_json(path)))
        assert scanpath_from_json(doc).subject == "h3"
