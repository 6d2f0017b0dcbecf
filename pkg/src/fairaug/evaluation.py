"""Fairness metric battery over classifier predictions.

Conditioning is on the four joint environment conditions
(lighting, background). For a prediction set restricted to one split:

* demographic parity DP[y, e]   = #(pred = y and cond = e) / #(cond = e)
* equal opportunity  EO[y, e]   = #(pred = y = true and cond = e) / #(true = y and cond = e)
* disparity                     = max - min over the defined cells

Per-intersection cells hold one true class within one condition, so
cell accuracy is the fraction of that cell classified correctly (which
coincides with recall there); cell precision is one-vs-rest within the
condition. Per-class cells are one-vs-rest over the whole prediction
set, with accuracy = (TP + TN) / N. Zero-support cells are undefined,
never silently zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .intersections import IntersectionKey
from .manifest import BG_CATS, LIGHTING_CATS, Manifest

CONDITIONS = tuple((lc, bc) for lc in LIGHTING_CATS for bc in BG_CATS)

FOOTNOTES = (
    "Disparity flags use the strict comparison disparity > threshold; a value "
    "equal to the threshold is not flagged.",
    "Cells with zero support are reported as undefined and excluded from "
    "disparity extrema and metric ranges.",
)


def cond_name(cond: tuple[str, str]) -> str:
    return f"{cond[0]}/{cond[1]}"


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    true_class: str
    predicted_class: str
    scores: tuple[float, ...] | None = None


@dataclass(frozen=True)
class MetricCell:
    class_label: str
    support: int
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    lighting_cat: str | None = None
    bg_cat: str | None = None

    @property
    def key(self) -> IntersectionKey | None:
        if self.lighting_cat is None:
            return None
        return IntersectionKey(self.class_label, self.lighting_cat, self.bg_cat)

    def to_dict(self) -> dict:
        d = {"class": self.class_label}
        if self.lighting_cat is not None:
            d["lighting"] = self.lighting_cat
            d["background"] = self.bg_cat
        d.update(
            support=self.support,
            accuracy=self.accuracy,
            precision=self.precision,
            recall=self.recall,
            f1=self.f1,
        )
        return d


@dataclass(frozen=True)
class BiasFlag:
    metric: str
    value: float
    threshold: float

    def to_dict(self) -> dict:
        return {"metric": self.metric, "value": self.value, "threshold": self.threshold}


@dataclass
class FairnessReport:
    labels: tuple[str, ...]
    n: int
    overall_accuracy: float
    dp_table: dict[str, dict[str, float | None]]
    dp_by_class: dict[str, float]
    dp_disparity: float
    eo_table: dict[str, dict[str, float | None]]
    eo_by_class: dict[str, float | None]
    eo_disparity: float
    per_intersection: list[MetricCell]
    per_class: list[MetricCell]
    confusion: list[list[int]]
    flags: list[BiasFlag]
    threshold: float
    undefined_cells: list[str]
    footnotes: tuple[str, ...] = FOOTNOTES
    run_config: dict | None = field(default=None)

    def to_dict(self) -> dict:
        d = {
            "labels": list(self.labels),
            "n": self.n,
            "overall_accuracy": self.overall_accuracy,
            "demographic_parity": {
                "table": self.dp_table,
                "by_class": self.dp_by_class,
                "disparity": self.dp_disparity,
            },
            "equal_opportunity": {
                "table": self.eo_table,
                "by_class": self.eo_by_class,
                "disparity": self.eo_disparity,
            },
            "per_intersection": [c.to_dict() for c in self.per_intersection],
            "per_class": [c.to_dict() for c in self.per_class],
            "confusion": {"labels": list(self.labels), "counts": self.confusion},
            "flags": [f.to_dict() for f in self.flags],
            "flag_threshold": self.threshold,
            "undefined_cells": self.undefined_cells,
            "footnotes": list(self.footnotes),
        }
        if self.run_config is not None:
            d["run_config"] = self.run_config
        return d

    def intersection_accuracy(self) -> dict[IntersectionKey, float]:
        return {
            c.key: c.accuracy for c in self.per_intersection if c.accuracy is not None
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FairnessReport":
        def cell(entry: dict) -> MetricCell:
            return MetricCell(
                class_label=entry["class"],
                support=entry["support"],
                accuracy=entry["accuracy"],
                precision=entry["precision"],
                recall=entry["recall"],
                f1=entry["f1"],
                lighting_cat=entry.get("lighting"),
                bg_cat=entry.get("background"),
            )

        dp = d["demographic_parity"]
        eo = d["equal_opportunity"]
        return cls(
            labels=tuple(d["labels"]),
            n=d["n"],
            overall_accuracy=d["overall_accuracy"],
            dp_table=dp["table"],
            dp_by_class=dp["by_class"],
            dp_disparity=dp["disparity"],
            eo_table=eo["table"],
            eo_by_class=eo["by_class"],
            eo_disparity=eo["disparity"],
            per_intersection=[cell(c) for c in d["per_intersection"]],
            per_class=[cell(c) for c in d["per_class"]],
            confusion=d["confusion"]["counts"],
            flags=[BiasFlag(**f) for f in d["flags"]],
            threshold=d["flag_threshold"],
            undefined_cells=list(d["undefined_cells"]),
            footnotes=tuple(d["footnotes"]),
            run_config=d.get("run_config"),
        )


def load_predictions(
    path: str | Path, labels: tuple[str, ...] | None = None
) -> list[PredictionRecord]:
    """Read a predictions CSV: ``id,true_class,pred_class[,p_1..p_C]``.

    When score columns are present and the label ordering is known, the
    row is checked for sum ~ 1 and argmax consistency (ties break to
    the lowest class index).
    """
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty predictions file") from None
        if header[:3] != ["id", "true_class", "pred_class"]:
            raise DataError(f"{path}: unexpected header {header!r}")
        score_cols = header[3:]
        if score_cols and score_cols != [f"p_{i + 1}" for i in range(len(score_cols))]:
            raise DataError(f"{path}: malformed score columns {score_cols!r}")
        if score_cols and labels is not None and len(score_cols) != len(labels):
            raise DataError(
                f"{path}: {len(score_cols)} score columns for {len(labels)} classes"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            scores = None
            if score_cols:
                try:
                    scores = tuple(float(v) for v in row[3:])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                if abs(sum(scores) - 1.0) > 1e-6:
                    raise DataError(
                        f"{path}:{lineno}: scores sum to {sum(scores)}, expected 1"
                    )
                if labels is not None:
                    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
                    if labels[best] != row[2]:
                        raise DataError(
                            f"{path}:{lineno}: pred_class {row[2]!r} is not the "
                            f"argmax class {labels[best]!r}"
                        )
            records.append(PredictionRecord(row[0], row[1], row[2], scores))
    if not records:
        raise DataError(f"{path}: empty predictions file")
    return records


def write_predictions(preds: list[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        n_scores = len(preds[0].scores) if preds and preds[0].scores else 0
        header = ["id", "true_class", "pred_class"]
        header += [f"p_{i + 1}" for i in range(n_scores)]
        writer.writerow(header)
        for p in preds:
            row = [p.sample_id, p.true_class, p.predicted_class]
            if n_scores:
                row += [repr(v) for v in p.scores]
            writer.writerow(row)


def confusion_matrix(
    preds: list[PredictionRecord], labels: tuple[str, ...]
) -> list[list[int]]:
    """counts[i][j] = number of samples with true class i predicted as j."""
    index = {c: i for i, c in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for p in preds:
        counts[index[p.true_class]][index[p.predicted_class]] += 1
    return counts


def _disparity(table: dict[str, dict[str, float | None]]) -> float:
    defined = [v for row in table.values() for v in row.values() if v is not None]
    if not defined:
        raise DataError("no defined cells: disparity undefined")
    return max(defined) - min(defined)


def evaluate(
    preds: list[PredictionRecord],
    manifest: Manifest,
    split: str = "test",
    threshold: float = 0.15,
) -> FairnessReport:
    """Compute the full fairness report for predictions on one split."""
    if not preds:
        raise DataError("no predictions given")
    split_records = {r.id: r for r in manifest.samples_in(split)}
    if not split_records:
        raise DataError(f"no samples in split {split!r}")

    seen: set[str] = set()
    missing_env: list[str] = []
    for p in preds:
        if p.sample_id in seen:
            raise DataError(f"duplicate prediction for sample {p.sample_id!r}")
        seen.add(p.sample_id)
        rec = split_records.get(p.sample_id)
        if rec is None:
            raise DataError(f"prediction for unknown sample {p.sample_id!r} (split {split!r})")
        if rec.class_label != p.true_class:
            raise DataError(
                f"sample {p.sample_id!r}: true_class {p.true_class!r} does not match "
                f"manifest class {rec.class_label!r}"
            )
        if p.predicted_class not in manifest.labels:
            raise DataError(
                f"sample {p.sample_id!r}: predicted class {p.predicted_class!r} is not "
                "in the label set"
            )
        if rec.env is None:
            missing_env.append(p.sample_id)
    if missing_env:
        raise DataError(
            "samples missing environmental attributes: " + ", ".join(missing_env[:10])
        )

    labels = manifest.labels
    n = len(preds)
    cond_of = {p.sample_id: split_records[p.sample_id].env.condition for p in preds}

    # tallies
    cond_total = {c: 0 for c in CONDITIONS}
    pred_in_cond = {(y, c): 0 for y in labels for c in CONDITIONS}
    cell_support = {(y, c): 0 for y in labels for c in CONDITIONS}
    cell_tp = {(y, c): 0 for y in labels for c in CONDITIONS}
    pred_total = {y: 0 for y in labels}
    correct = 0
    for p in preds:
        cond = cond_of[p.sample_id]
        cond_total[cond] += 1
        pred_in_cond[(p.predicted_class, cond)] += 1
        cell_support[(p.true_class, cond)] += 1
        pred_total[p.predicted_class] += 1
        if p.predicted_class == p.true_class:
            cell_tp[(p.true_class, cond)] += 1
            correct += 1

    undefined: list[str] = []
    dp_table: dict[str, dict[str, float | None]] = {}
    eo_table: dict[str, dict[str, float | None]] = {}
    for y in labels:
        dp_row: dict[str, float | None] = {}
        eo_row: dict[str, float | None] = {}
        for cond in CONDITIONS:
            name = cond_name(cond)
            if cond_total[cond] > 0:
                dp_row[name] = pred_in_cond[(y, cond)] / cond_total[cond]
            else:
                dp_row[name] = None
                undefined.append(f"dp:{y}/{name}")
            if cell_support[(y, cond)] > 0:
                eo_row[name] = cell_tp[(y, cond)] / cell_support[(y, cond)]
            else:
                eo_row[name] = None
                undefined.append(f"eo:{y}/{name}")
        dp_table[y] = dp_row
        eo_table[y] = eo_row

    dp_by_class = {y: pred_total[y] / n for y in labels}
    eo_by_class: dict[str, float | None] = {}
    for y in labels:
        support_y = sum(cell_support[(y, c)] for c in CONDITIONS)
        tp_y = sum(cell_tp[(y, c)] for c in CONDITIONS)
        eo_by_class[y] = tp_y / support_y if support_y > 0 else None

    per_intersection = []
    for y in labels:
        for cond in CONDITIONS:
            support = cell_support[(y, cond)]
            tp = cell_tp[(y, cond)]
            predicted_y = pred_in_cond[(y, cond)]
            accuracy = tp / support if support > 0 else None
            precision = tp / predicted_y if predicted_y > 0 else None
            recall = accuracy
            f1 = None
            if precision is not None and recall is not None and precision + recall > 0:
                f1 = 2 * precision * recall / (precision + recall)
            per_intersection.append(
                MetricCell(
                    class_label=y,
                    support=support,
                    accuracy=accuracy,
                    precision=precision,
                    recall=recall,
                    f1=f1,
                    lighting_cat=cond[0],
                    bg_cat=cond[1],
                )
            )

    confusion = confusion_matrix(preds, labels)
    per_class = []
    for i, y in enumerate(labels):
        support = sum(confusion[i])
        tp = confusion[i][i]
        fp = sum(confusion[j][i] for j in range(len(labels)) if j != i)
        fn = support - tp
        tn = n - tp - fp - fn
        accuracy = (tp + tn) / n
        precision = tp / (tp + fp) if tp + fp > 0 else None
        recall = tp / support if support > 0 else None
        f1 = None
        if precision is not None and recall is not None and precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        per_class.append(
            MetricCell(
                class_label=y,
                support=support,
                accuracy=accuracy,
                precision=precision,
                recall=recall,
                f1=f1,
            )
        )

    report = FairnessReport(
        labels=labels,
        n=n,
        overall_accuracy=correct / n,
        dp_table=dp_table,
        dp_by_class=dp_by_class,
        dp_disparity=_disparity(dp_table),
        eo_table=eo_table,
        eo_by_class=eo_by_class,
        eo_disparity=_disparity(eo_table),
        per_intersection=per_intersection,
        per_class=per_class,
        confusion=confusion,
        flags=[],
        threshold=threshold,
        undefined_cells=undefined,
    )
    report.flags = flag_bias(report, threshold)
    return report


def flag_bias(report: FairnessReport, threshold: float = 0.15) -> list[BiasFlag]:
    """Flag each disparity strictly above the threshold."""
    flags = []
    if report.dp_disparity > threshold:
        flags.append(BiasFlag("dp_disparity", report.dp_disparity, threshold))
    if report.eo_disparity > threshold:
        flags.append(BiasFlag("eo_disparity", report.eo_disparity, threshold))
    return flags


def disparity_reduction(before: float, after: float) -> float:
    """Relative reduction (before - after) / before."""
    if before <= 0:
        raise DataError(f"reduction undefined for non-positive baseline {before}")
    return (before - after) / before


def accuracy_range(cells: list[MetricCell]) -> float:
    """Spread (max - min) of the defined accuracies."""
    defined = [c.accuracy for c in cells if c.accuracy is not None]
    if not defined:
        raise DataError("all cells undefined: accuracy range unavailable")
    return max(defined) - min(defined)


def write_report_csvs(report: FairnessReport, out_dir: str | Path) -> list[Path]:
    """Flat CSV per table next to the JSON report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, header: list[str], rows: list[list]) -> None:
        p = out_dir / name
        with p.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        written.append(p)

    def fmt(v):
        return "" if v is None else repr(v)

    emit(
        "per_intersection.csv",
        ["class", "lighting", "background", "support", "accuracy", "precision", "recall", "f1"],
        [
            [c.class_label, c.lighting_cat, c.bg_cat, c.support, fmt(c.accuracy),
             fmt(c.precision), fmt(c.recall), fmt(c.f1)]
            for c in report.per_intersection
        ],
    )
    emit(
        "per_class.csv",
        ["class", "support", "accuracy", "precision", "recall", "f1"],
        [
            [c.class_label, c.support, fmt(c.accuracy), fmt(c.precision),
             fmt(c.recall), fmt(c.f1)]
            for c in report.per_class
        ],
    )
    for metric, table in (("dp", report.dp_table), ("eo", report.eo_table)):
        emit(
            f"{metric}.csv",
            ["class", "lighting", "background", "value"],
            [
                [y, cond[0], cond[1], fmt(table[y][cond_name(cond)])]
                for y in report.labels
                for cond in CONDITIONS
            ],
        )
    emit(
        "confusion.csv",
        ["true\\pred"] + list(report.labels),
        [[y] + report.confusion[i] for i, y in enumerate(report.labels)],
    )
    return written
