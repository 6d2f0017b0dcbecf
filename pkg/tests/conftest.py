import numpy as np
import pytest

from fairaug.images import save_png
from fairaug.manifest import EnvAttributes, Manifest, SampleRecord


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__ == "test_acceptance":
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[{status}] {doc}")


def gray_image(h, w, value):
    return np.full((h, w, 3), value, dtype=np.uint8)


def checkerboard(h, w, a, b, tile):
    yy, xx = np.indices((h, w))
    cell = ((yy // tile) + (xx // tile)) % 2
    plane = np.where(cell == 0, a, b).astype(np.uint8)
    return np.repeat(plane[..., None], 3, axis=2)


@pytest.fixture
def tiny_dataset(tmp_path):
    """Three images on disk plus a matching manifest."""
    imgs = {
        "s1": gray_image(32, 32, 40),
        "s2": gray_image(32, 32, 200),
        "s3": checkerboard(32, 32, 0, 255, 4),
    }
    classes = {"s1": "cat", "s2": "dog", "s3": "cat"}
    samples = []
    for sid, img in imgs.items():
        path = tmp_path / f"{sid}.png"
        save_png(img, path)
        samples.append(SampleRecord(sid, str(path), classes[sid], "train"))
    return Manifest.from_samples(samples), tmp_path


def assert_report_matches_counting_oracle(report, expected):
    """Field-by-field exact comparison against a fixtures.count_report dict."""
    from fairaug.evaluation import CONDITIONS, cond_name

    assert report.n == expected["n"]
    assert report.overall_accuracy == expected["overall_accuracy"]
    assert report.dp_disparity == expected["dp_disparity"]
    assert report.eo_disparity == expected["eo_disparity"]
    assert report.confusion == expected["confusion"]
    for y in report.labels:
        assert report.dp_by_class[y] == expected["dp_by_class"][y]
        assert report.eo_by_class[y] == expected["eo_by_class"][y]
        for cond in CONDITIONS:
            assert report.dp_table[y][cond_name(cond)] == expected["dp_table"][y][cond]
            assert report.eo_table[y][cond_name(cond)] == expected["eo_table"][y][cond]
    for cell in report.per_intersection:
        exp = expected["per_intersection"][(cell.class_label, cell.lighting_cat, cell.bg_cat)]
        assert cell.support == exp["support"]
        assert cell.accuracy == exp["accuracy"]
        assert cell.precision == exp["precision"]
        assert cell.recall == exp["recall"]
        assert cell.f1 == exp["f1"]
    for cell in report.per_class:
        exp = expected["per_class"][cell.class_label]
        assert cell.support == exp["support"]
        assert cell.accuracy == exp["accuracy"]
        assert cell.precision == exp["precision"]
        assert cell.recall == exp["recall"]
        assert cell.f1 == exp["f1"]


def make_manifest(spec):
    """spec: list of (id, class, split, lighting_cat, bg_cat) tuples."""
    score = {"low": 40.0, "high": 200.0}
    density = {"simple": 0.05, "complex": 0.5}
    samples = [
        SampleRecord(
            sid,
            f"{sid}.png",
            cls,
            split,
            EnvAttributes.from_scores(score[lcat], density[bcat]),
        )
        for sid, cls, split, lcat, bcat in spec
    ]
    return Manifest.from_samples(samples)
