"""Fairness metrics against hand-tallied fixtures and the counting oracle."""

import math

import pytest

from conftest import assert_report_matches_counting_oracle, make_manifest
from fairaug.errors import DataError
from fairaug.evaluation import (
    MetricCell,
    PredictionRecord,
    accuracy_range,
    confusion_matrix,
    disparity_reduction,
    evaluate,
    flag_bias,
    load_predictions,
)
from fairaug.fixtures import generate_predictions


def cell(accuracy):
    return MetricCell("x", 10, accuracy, None, None, None)


# hand-tallied 40-sample fixture: 2 classes x 2 conditions
#   e1 = (low, simple):  A->A 8, A->B 2, B->B 6, B->A 4
#   e2 = (high, simple): A->A 5, A->B 5, B->B 9, B->A 1
FORTY = {
    ("A", "A", ("low", "simple")): 8,
    ("A", "B", ("low", "simple")): 2,
    ("B", "B", ("low", "simple")): 6,
    ("B", "A", ("low", "simple")): 4,
    ("A", "A", ("high", "simple")): 5,
    ("A", "B", ("high", "simple")): 5,
    ("B", "B", ("high", "simple")): 9,
    ("B", "A", ("high", "simple")): 1,
}


class TestEvaluateBasics:
    def test_perfect_predictor(self):
        spec = [
            (f"s{i}", ("a", "b")[i % 2], "test", ("low", "high")[i % 2],
             ("simple", "complex")[(i // 2) % 2])
            for i in range(24)
        ]
        manifest = make_manifest(spec)
        preds = [
            PredictionRecord(r.id, r.class_label, r.class_label)
            for r in manifest.samples
        ]
        report = evaluate(preds, manifest)
        assert report.overall_accuracy == 1.0
        defined_eo = [
            v for row in report.eo_table.values() for v in row.values() if v is not None
        ]
        assert all(v == 1.0 for v in defined_eo)
        assert report.eo_disparity == 0.0
        assert all(c.accuracy in (1.0, None) for c in report.per_intersection)

    def test_constant_predictor(self):
        spec = [
            (f"s{i}", ("a", "b")[i % 2], "test", ("low", "high")[i % 2], "simple")
            for i in range(20)
        ]
        manifest = make_manifest(spec)
        preds = [PredictionRecord(r.id, r.class_label, "a") for r in manifest.samples]
        report = evaluate(preds, manifest)
        for cond, value in report.dp_table["a"].items():
            if value is not None:
                assert value == 1.0
                assert report.dp_table["b"][cond] == 0.0
        assert report.dp_disparity == 1.0

    def test_hand_tallied_forty_sample_fixture(self):
        preds, manifest, _ = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        e1, e2 = "low/simple", "high/simple"
        assert report.dp_table["A"][e1] == 0.6
        assert report.dp_table["B"][e1] == 0.4
        assert report.dp_table["A"][e2] == 0.3
        assert report.dp_table["B"][e2] == 0.7
        assert report.dp_disparity == pytest.approx(0.4, abs=1e-15)
        assert report.eo_table["A"][e1] == 0.8
        assert report.eo_table["B"][e1] == 0.6
        assert report.eo_table["A"][e2] == 0.5
        assert report.eo_table["B"][e2] == 0.9
        assert report.eo_disparity == pytest.approx(0.4, abs=1e-15)
        assert report.overall_accuracy == 0.7
        assert report.confusion == [[13, 7], [5, 15]]
        cell_a = next(
            c for c in report.per_intersection
            if c.class_label == "A" and c.lighting_cat == "low"
        )
        assert cell_a.support == 10
        assert cell_a.accuracy == 0.8
        assert cell_a.precision == 8 / 12
        assert cell_a.f1 == pytest.approx(16 / 22, abs=1e-15)
        class_a = next(c for c in report.per_class if c.class_label == "A")
        assert class_a.accuracy == 0.7
        assert class_a.precision == 13 / 18
        assert class_a.recall == 0.65
        assert class_a.f1 == pytest.approx(26 / 38, abs=1e-15)

    def test_matches_counting_oracle_exactly(self):
        preds, manifest, expected = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        assert_report_matches_counting_oracle(report, expected)

    def test_dp_columns_sum_to_one(self):
        preds, manifest, _ = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        for cond in ("low/simple", "high/simple"):
            total = math.fsum(report.dp_table[y][cond] for y in report.labels)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_relabeling_invariance(self):
        renamed = {
            (t.replace("A", "Z"), p.replace("A", "Z"), c): n
            for (t, p, c), n in FORTY.items()
        }
        preds_a, manifest_a, _ = generate_predictions(FORTY)
        preds_z, manifest_z, _ = generate_predictions(renamed)
        rep_a = evaluate(preds_a, manifest_a)
        rep_z = evaluate(preds_z, manifest_z)
        assert rep_a.dp_disparity == rep_z.dp_disparity
        assert rep_a.eo_disparity == rep_z.eo_disparity
        assert rep_a.overall_accuracy == rep_z.overall_accuracy
        assert accuracy_range(rep_a.per_intersection) == accuracy_range(
            rep_z.per_intersection
        )

    def test_eo_by_class_is_support_weighted_mean(self):
        preds, manifest, _ = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        from fairaug.evaluation import cond_name

        for y in report.labels:
            supports, values = [], []
            for cell_ in report.per_intersection:
                if cell_.class_label == y and cell_.support > 0:
                    supports.append(cell_.support)
                    values.append(report.eo_table[y][cond_name((cell_.lighting_cat, cell_.bg_cat))])
            weighted = sum(s * v for s, v in zip(supports, values)) / sum(supports)
            assert report.eo_by_class[y] == pytest.approx(weighted, abs=1e-12)

    def test_report_dict_round_trip(self):
        from fairaug.evaluation import FairnessReport

        preds, manifest, _ = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        report.run_config = {"command": "evaluate", "options": {}}
        rebuilt = FairnessReport.from_dict(report.to_dict())
        assert rebuilt.to_dict() == report.to_dict()
        assert rebuilt.per_class == report.per_class
        assert rebuilt.dp_disparity == report.dp_disparity

    def test_empty_intersection_marked_undefined(self):
        counts = dict(FORTY)
        preds, manifest, _ = generate_predictions(counts)
        report = evaluate(preds, manifest)
        # no samples in (low, complex) or (high, complex) conditions
        assert report.dp_table["A"]["low/complex"] is None
        assert "dp:A/low/complex" in report.undefined_cells
        undefined_eo = [c for c in report.per_intersection if c.accuracy is None]
        assert all(c.support == 0 for c in undefined_eo)


class TestEvaluateValidation:
    def _setup(self):
        return generate_predictions(FORTY)[:2]

    def test_duplicate_prediction(self):
        preds, manifest, _ = generate_predictions(FORTY)
        with pytest.raises(DataError, match="duplicate"):
            evaluate(preds + [preds[0]], manifest)

    def test_unknown_sample_named(self):
        preds, manifest, _ = generate_predictions(FORTY)
        ghost = PredictionRecord("ghost", "A", "A")
        with pytest.raises(DataError, match="ghost"):
            evaluate(preds + [ghost], manifest)

    def test_true_class_mismatch(self):
        preds, manifest, _ = generate_predictions(FORTY)
        bad = PredictionRecord(preds[0].sample_id, "B" if preds[0].true_class == "A" else "A",
                               preds[0].predicted_class)
        with pytest.raises(DataError, match="does not match"):
            evaluate([bad] + preds[1:], manifest)

    def test_no_predictions(self):
        _, manifest, _ = generate_predictions(FORTY)
        with pytest.raises(DataError, match="no predictions"):
            evaluate([], manifest)

    def test_missing_env(self):
        spec = [("s0", "a", "test", "low", "simple")]
        manifest = make_manifest(spec + [("s1", "b", "test", "low", "simple")])
        from fairaug.manifest import Manifest, SampleRecord

        stripped = Manifest(
            labels=manifest.labels,
            samples=tuple(
                SampleRecord(r.id, r.image_path, r.class_label, r.split, None)
                for r in manifest.samples
            ),
        )
        preds = [PredictionRecord("s0", "a", "a"), PredictionRecord("s1", "b", "b")]
        with pytest.raises(DataError, match="missing environmental"):
            evaluate(preds, stripped)


class TestConfusion:
    def test_anti_diagonal(self):
        labels = ("a", "b")
        preds = [
            PredictionRecord("s0", "a", "b"),
            PredictionRecord("s1", "a", "b"),
            PredictionRecord("s2", "b", "a"),
        ]
        assert confusion_matrix(preds, labels) == [[0, 2], [1, 0]]

    def test_row_sums_are_supports(self):
        preds, manifest, expected = generate_predictions(FORTY)
        counts = confusion_matrix(preds, manifest.labels)
        for i, label in enumerate(manifest.labels):
            assert sum(counts[i]) == expected["per_class"][label]["support"]


class TestDisparityReduction:
    def test_reported_dp_reduction(self):
        assert disparity_reduction(0.142, 0.092) == pytest.approx(0.352, abs=1e-3)

    def test_reported_eo_reduction(self):
        assert disparity_reduction(0.187, 0.121) == pytest.approx(0.353, abs=1e-3)

    def test_no_change(self):
        assert disparity_reduction(0.5, 0.5) == 0.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(DataError):
            disparity_reduction(0.0, 0.1)


class TestAccuracyRange:
    def test_reported_baseline_cells(self):
        cells = [cell(a) for a in (0.923, 0.856, 0.801, 0.687, 0.604, 0.631)]
        assert accuracy_range(cells) == pytest.approx(0.319, abs=1e-12)

    def test_reported_treated_cells(self):
        cells = [cell(a) for a in (0.941, 0.879, 0.834, 0.823, 0.847, 0.812)]
        assert accuracy_range(cells) == pytest.approx(0.129, abs=1e-12)

    def test_single_cell(self):
        assert accuracy_range([cell(0.7)]) == 0.0

    def test_all_undefined(self):
        with pytest.raises(DataError):
            accuracy_range([cell(None), cell(None)])


class TestFlagBias:
    def _report(self, dp, eo):
        preds, manifest, _ = generate_predictions(FORTY)
        report = evaluate(preds, manifest)
        report.dp_disparity = dp
        report.eo_disparity = eo
        return report

    def test_only_eo_flagged(self):
        flags = flag_bias(self._report(0.142, 0.187))
        assert [f.metric for f in flags] == ["eo_disparity"]

    def test_none_flagged(self):
        assert flag_bias(self._report(0.092, 0.121)) == []

    def test_boundary_not_flagged(self):
        assert flag_bias(self._report(0.15, 0.15)) == []

    def test_custom_threshold(self):
        flags = flag_bias(self._report(0.142, 0.187), threshold=0.10)
        assert [f.metric for f in flags] == ["dp_disparity", "eo_disparity"]


class TestLoadPredictions:
    def test_with_scores(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text(
            "id,true_class,pred_class,p_1,p_2\n"
            "s0,a,a,0.9,0.1\n"
            "s1,b,a,0.5,0.5\n"  # tie breaks to lowest class index
        )
        preds = load_predictions(path, labels=("a", "b"))
        assert preds[0].scores == (0.9, 0.1)
        assert preds[1].predicted_class == "a"

    def test_scores_must_sum_to_one(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,true_class,pred_class,p_1,p_2\ns0,a,a,0.9,0.2\n")
        with pytest.raises(DataError, match="sum"):
            load_predictions(path, labels=("a", "b"))

    def test_argmax_mismatch_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,true_class,pred_class,p_1,p_2\ns0,a,b,0.9,0.1\n")
        with pytest.raises(DataError, match="argmax"):
            load_predictions(path, labels=("a", "b"))

    def test_round_trip(self, tmp_path):
        from fairaug.evaluation import write_predictions

        preds = [PredictionRecord("s0", "a", "a"), PredictionRecord("s1", "b", "a")]
        path = tmp_path / "p.csv"
        write_predictions(preds, path)
        assert load_predictions(path) == preds
