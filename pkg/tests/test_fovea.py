"""Pyramid geometry, cropping/downsampling, box remapping, pixel cost."""

import json

import numpy as np
import pytest

from fovsearch import (
    BBox,
    ConfigError,
    FoveaConfig,
    OutOfBoundsError,
    build_pyramid,
    image_to_layer,
    layer_frames,
    layer_side,
    pixel_cost,
    remap_bbox,
    resize_bilinear,
    write_layers,
)


def checker_image(h=1050, w=1680, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (h, w), dtype=np.uint8)


class TestLayerSide:
    def test_identity_at_level_one(self):
        assert layer_side(1, 160) == 160

    def test_doubling_formula(self):
        assert layer_side(4, 160) == 1280

    def test_total_coverage_3x256(self):
        assert layer_side(3, 256) == 1024

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("base", [2, 64, 160, 256])
    def test_exact_doubling(self, n, base):
        assert layer_side(n + 1, base) == 2 * layer_side(n, base)

    def test_rejects_bad_domain(self):
        with pytest.raises(ConfigError):
            layer_side(0, 160)
        with pytest.raises(ConfigError):
            layer_side(2, 0)


class TestFoveaConfig:
    def test_odd_base_rejected(self):
        with pytest.raises(ConfigError):
            FoveaConfig(4, 161, 1050, 1680)

    def test_base_must_undercut_image(self):
        with pytest.raises(ConfigError):
            FoveaConfig(1, 1050, 1050, 1680)

    def test_pad_is_half_outermost(self):
        assert FoveaConfig(4, 160, 1050, 1680).pad == 640
        assert FoveaConfig(1, 160, 1050, 1680).pad == 80


class TestBuildPyramid:
    def test_center_pyramid_shapes_and_coverage(self):
        cfg = FoveaConfig(4, 160, 1050, 1680)
        pyr = build_pyramid(checker_image(), (840, 525), cfg)
        assert len(pyr) == 4
        for frame, raster in pyr:
            assert raster.shape == (160, 160)
            assert raster.dtype == np.uint8
        outer = pyr[-1][0].image_box
        assert (outer.x0, outer.y0, outer.x1, outer.y1) == (200, -115, 1480, 1165)
        assert outer.width == outer.height == 1280

    def test_single_level_is_exact_crop(self):
        img = checker_image()
        cfg = FoveaConfig(1, 160, 1050, 1680)
        (frame, raster), = build_pyramid(img, (840, 525), cfg)
        np.testing.assert_array_equal(raster, img[445:605, 760:920])

    def test_l1_fidelity_from_padded_source(self):
        img = checker_image()
        cfg = FoveaConfig(4, 160, 1050, 1680)
        (frame, raster) = build_pyramid(img, (100, 100), cfg)[0]
        # L1 around (100,100) covers rows/cols 20..180 of the original image
        np.testing.assert_array_equal(raster, img[20:180, 20:180])

    def test_corner_focal_pads_with_zeros(self):
        img = np.full((1050, 1680), 255, dtype=np.uint8)
        cfg = FoveaConfig(4, 160, 1050, 1680)
        pyr = build_pyramid(img, (0, 0), cfg)
        outer = pyr[-1][1]
        # top-left quadrant of L4 lies fully outside the image
        assert outer[:70, :70].max() == 0
        assert outer[90:, 90:].min() > 0

    def test_out_of_bounds_focal_rejected(self):
        cfg = FoveaConfig(4, 160, 1050, 1680)
        with pytest.raises(OutOfBoundsError):
            build_pyramid(checker_image(), (1680, 10), cfg)
        with pytest.raises(OutOfBoundsError):
            layer_frames((-1, 0), cfg)

    def test_constant_region_downsamples_to_constant(self):
        img = np.full((1050, 1680), 137, dtype=np.uint8)
        cfg = FoveaConfig(3, 64, 1050, 1680)
        for frame, raster in build_pyramid(img, (840, 525), cfg):
            assert raster.min() == raster.max() == 137

    def test_coverage_nesting(self):
        cfg = FoveaConfig(5, 64, 1050, 1680)
        frames = layer_frames((300, 400), cfg)
        for inner, outer in zip(frames, frames[1:]):
            ib, ob = inner.image_box, outer.image_box
            assert ob.x0 < ib.x0 and ob.y0 < ib.y0
            assert ob.x1 > ib.x1 and ob.y1 > ib.y1

    def test_rgb_raster_supported(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (300, 400, 3), dtype=np.uint8)
        cfg = FoveaConfig(2, 64, 300, 400)
        for frame, raster in build_pyramid(img, (200, 150), cfg):
            assert raster.shape == (64, 64, 3)


class TestResizeBilinear:
    def test_factor_two_is_block_mean(self):
        # With centers at (k+0.5)*2-0.5 every weight is exactly one half, so
        # a 2x downsample equals the 2x2 block mean.
        rng = np.random.default_rng(3)
        img = rng.uniform(0, 255, (8, 8))
        expected = img.reshape(4, 2, 4, 2).mean(axis=(1, 3))
        np.testing.assert_allclose(resize_bilinear(img, 4, 4), expected, rtol=0, atol=1e-12)

    def test_preserves_constants_at_any_factor(self):
        img = np.full((64, 64), 41.0)
        for out in (32, 16, 8):
            res = resize_bilinear(img, out, out)
            np.testing.assert_array_equal(res, np.full((out, out), 41.0))


class TestRemapBBox:
    def test_hand_case_layer_two(self):
        box, clipped = remap_bbox(
            BBox(10, 20, 50, 60, frame="layer:2"), (840, 525), 2, 160, 1050, 1680
        )
        assert (box.x0, box.y0, box.x1, box.y1) == (700, 405, 780, 485)
        assert not clipped

    def test_level_one_is_pure_translation(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            x0, y0 = rng.uniform(0, 100, 2)
            w, h = rng.uniform(0, 60, 2)
            src = BBox(x0, y0, x0 + w, y0 + h, frame="layer:1")
            box, _ = remap_bbox(src, (840, 525), 1, 160, 1050, 1680)
            assert box.x0 == pytest.approx(840 - 80 + x0, abs=1e-12)
            assert box.y0 == pytest.approx(525 - 80 + y0, abs=1e-12)
            assert box.width == pytest.approx(w, abs=1e-12)

    def test_edge_box_clips_into_image(self):
        # A box touching the outer edge of L4 remaps beyond the padded
        # boundary of a 1050x1680 image and must clip back inside.
        box, clipped = remap_bbox(
            BBox(0, 0, 160, 160, frame="layer:4"), (840, 525), 4, 160, 1050, 1680
        )
        assert clipped
        assert (box.x0, box.y0, box.x1, box.y1) == (200, 0, 1480, 1050)

    def test_roundtrip_against_inverse(self):
        # Oracle: push an image-frame box into layer coordinates with the
        # inverse map, remap it back, and demand sub-pixel agreement.
        cfg = FoveaConfig(5, 64, 1050, 1680)
        frames = layer_frames((777, 333), cfg)
        rng = np.random.default_rng(11)
        for frame in frames:
            ib = frame.image_box
            for _ in range(200):
                x0 = rng.uniform(max(ib.x0, 0), max(ib.x1 - 5, 1))
                y0 = rng.uniform(max(ib.y0, 0), max(ib.y1 - 5, 1))
                src = BBox(x0, y0, min(x0 + 4, 1680), min(y0 + 4, 1050), frame="image")
                lb = image_to_layer(src, frame)
                back, _ = remap_bbox(
                    lb, (777, 333), frame.index, 64, 1050, 1680
                )
                assert abs(back.x0 - src.x0) <= 1.0
                assert abs(back.y1 - src.y1) <= 1.0

    def test_frame_tag_enforced(self):
        with pytest.raises(ConfigError):
            remap_bbox(BBox(0, 0, 1, 1, frame="image"), (840, 525), 2, 160, 1050, 1680)


class TestPixelCost:
    @pytest.mark.parametrize(
        "levels,base,expected_px,expected_pct",
        [
            (4, 160, 102400, 5.805),
            (3, 256, 196608, 11.146),
            (4, 128, 65536, 3.715),
            (5, 64, 20480, 1.161),
        ],
    )
    def test_against_formula(self, levels, base, expected_px, expected_pct):
        absolute, pct = pixel_cost(FoveaConfig(levels, base, 1050, 1680))
        assert absolute == expected_px
        assert pct == pytest.approx(expected_pct, abs=5e-3)


class TestLayerEmission:
    def test_manifest_and_png_files(self, tmp_path):
        from PIL import Image

        cfg = FoveaConfig(3, 64, 300, 400)
        img = checker_image(300, 400)
        pyr = build_pyramid(img, (200, 150), cfg)
        manifest_path = write_layers(tmp_path, pyr, (200, 150), cfg)
        doc = json.loads(manifest_path.read_text())
        assert doc["focal"] == [200, 150]
        assert doc["levels"] == 3 and doc["base_side"] == 64
        assert [lyr["n"] for lyr in doc["layers"]] == [1, 2, 3]
        for lyr in doc["layers"]:
            assert lyr["bottom_right"][0] - lyr["top_left"][0] == lyr["side"]
            assert lyr["side"] == 64 * lyr["scale"]
            arr = np.asarray(Image.open(tmp_path / f"layer_{lyr['n']}.png"))
            assert arr.shape == (64, 64)
        # PNG round trip is bit exact for the full-resolution layer
        l1 = np.asarray(Image.open(tmp_path / "layer_1.png"))
        np.testing.assert_array_equal(l1, pyr[0][1])
