"""Attribute extraction against closed forms and an independent detector.

The edge-density reference oracle is OpenCV's Canny run on the same
Gaussian-blurred input; agreement is asserted on relative density for
the step fixture and on the categorical outcome for pattern corpora.
"""

import cv2
import numpy as np
import pytest

from conftest import checkerboard, gray_image
from fairaug.attributes import (
    CannyParams,
    categorize,
    edge_density,
    extract_all,
    lighting_score,
)
from fairaug.errors import DecodeError
from fairaug.fixtures import generate_image, randomized_specs
from fairaug.images import save_png
from fairaug.manifest import BG_THRESHOLD, Manifest, SampleRecord, write_manifest


def reference_edge_density(img, params=CannyParams()):
    """Independent oracle: OpenCV Canny on the blurred luma image."""
    gray = cv2.cvtColor(img, cv2.COLOR_RGB2GRAY)
    blurred = cv2.GaussianBlur(gray, (params.kernel_size, params.kernel_size), params.sigma)
    edges = cv2.Canny(blurred, int(params.low), int(params.high))
    return float((edges > 0).mean())


class TestLightingScore:
    def test_black(self):
        assert lighting_score(gray_image(16, 16, 0)) == 0.0

    def test_white(self):
        assert lighting_score(gray_image(16, 16, 255)) == 255.0

    def test_value_is_max_channel(self):
        # half (255,0,0), half (0,0,0): V = max(R,G,B) -> mean 127.5
        img = np.zeros((10, 10, 3), dtype=np.uint8)
        img[:5, :, 0] = 255
        assert lighting_score(img) == 127.5

    def test_flip_and_rotation_invariance(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8)
        base = lighting_score(img)
        assert lighting_score(img[::-1].copy()) == base
        assert lighting_score(img[:, ::-1].copy()) == base
        assert lighting_score(np.rot90(img).copy()) == base


class TestEdgeDensity:
    def test_constant_is_zero(self):
        for v in (0, 128, 255):
            assert edge_density(gray_image(64, 64, v)) == 0.0

    def test_step_edge_one_pixel_line(self):
        img = gray_image(100, 100, 0)
        img[:, 50:] = 255
        mine = edge_density(img)
        ref = reference_edge_density(img)
        assert ref > 0
        assert abs(mine - ref) / ref <= 0.20

    def test_checkerboard_is_complex(self):
        img = checkerboard(224, 224, 0, 255, 8)
        mine = edge_density(img)
        assert mine > BG_THRESHOLD
        assert reference_edge_density(img) > BG_THRESHOLD

    def test_density_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            img = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
            d = edge_density(img)
            assert 0.0 <= d <= 1.0

    def test_category_agreement_on_random_fixtures(self):
        agree = 0
        specs = randomized_specs(50, seed=2024)
        for spec in specs:
            img, _ = generate_image(spec)
            mine = edge_density(img) > BG_THRESHOLD
            ref = reference_edge_density(img) > BG_THRESHOLD
            agree += mine == ref
        assert agree >= 48  # >= 95% of 50


class TestCategorize:
    def test_paper_thresholds(self):
        assert categorize(84.99, 0.05) == ("low", "simple")
        assert categorize(85.0, 0.1) == ("high", "simple")
        assert categorize(200.0, 0.5) == ("high", "complex")

    def test_monotone_threshold_function(self):
        lighting_values = [0.0, 84.9, 85.0, 255.0]
        order = [categorize(v, 0.0)[0] for v in lighting_values]
        assert order == ["low", "low", "high", "high"]
        density_values = [0.0, 0.1, 0.100001, 1.0]
        order = [categorize(128.0, d)[1] for d in density_values]
        assert order == ["simple", "simple", "complex", "complex"]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            categorize(-1.0, 0.5)
        with pytest.raises(ValueError):
            categorize(10.0, 1.5)


class TestExtractAll:
    def test_fixture_values(self, tiny_dataset):
        manifest, _ = tiny_dataset
        result = extract_all(manifest)
        assert not result.failures
        by_id = result.manifest.by_id()
        assert by_id["s1"].env.lighting_score == 40.0
        assert by_id["s1"].env.lighting_cat == "low"
        assert by_id["s2"].env.lighting_score == 200.0
        assert by_id["s2"].env.bg_complexity == 0.0
        assert by_id["s3"].env.bg_cat == "complex"

    def test_idempotent_and_deterministic(self, tiny_dataset, tmp_path):
        manifest, _ = tiny_dataset
        first = extract_all(manifest).manifest
        second = extract_all(first).manifest
        assert first == second
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_manifest(first, a)
        write_manifest(second, b)
        assert a.read_bytes() == b.read_bytes()

    def test_thread_count_does_not_change_output(self, tiny_dataset):
        manifest, _ = tiny_dataset
        assert extract_all(manifest, threads=1) == extract_all(manifest, threads=4)

    def test_missing_file_names_sample(self, tiny_dataset):
        manifest, tmp = tiny_dataset
        broken = Manifest(
            labels=manifest.labels,
            samples=manifest.samples
            + (SampleRecord("ghost", str(tmp / "nope.png"), "cat", "train"),),
        )
        with pytest.raises(DecodeError, match="ghost"):
            extract_all(broken)
        result = extract_all(broken, on_error="skip")
        assert [f[0] for f in result.failures] == ["ghost"]
        assert result.manifest.by_id()["ghost"].env is None
        assert result.manifest.by_id()["s1"].env is not None

    def test_non_image_file_rejected(self, tmp_path):
        bad = tmp_path / "fake.png"
        bad.write_text("not an image")
        good = tmp_path / "ok.png"
        save_png(gray_image(16, 16, 10), good)
        m = Manifest.from_samples(
            [
                SampleRecord("bad", str(bad), "cat", "train"),
                SampleRecord("ok", str(good), "dog", "train"),
            ]
        )
        with pytest.raises(DecodeError, match="bad"):
            extract_all(m)
