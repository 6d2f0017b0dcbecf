"""Synthetic images and prediction sets with analytically known answers.

These are the oracle substrate for the test suite: every generated
image carries its closed-form lighting score (and, where the pattern
forces it, its edge-density category), and every generated prediction
set carries a full metric report computed by naive per-sample counting
that never touches the evaluation module.

Pattern kinds: constant, two_tone (horizontal split), checkerboard,
step_edge (vertical step), gradient (horizontal ramp).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .images import save_png
from .manifest import (
    BG_CATS,
    EnvAttributes,
    LIGHTING_CATS,
    Manifest,
    SampleRecord,
    categorize_scores,
    write_manifest,
)
from .evaluation import PredictionRecord
from .rng import STAGE_FIXTURE, SampleRng

KINDS = ("constant", "two_tone", "checkerboard", "step_edge", "gradient")

# representative continuous scores used when a fixture only pins the category
_SCORE_FOR_LIGHTING = {"low": 40.0, "high": 200.0}
_SCORE_FOR_BG = {"simple": 0.05, "complex": 0.5}


@dataclass(frozen=True)
class FixtureSpec:
    kind: str
    dims: tuple[int, int] = (64, 64)
    params: dict = field(default_factory=dict)
    target_class: str = "a"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown fixture kind {self.kind!r}")
        h, w = self.dims
        if h < 8 or w < 8:
            raise DataError("fixture images must be at least 8x8")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dims": list(self.dims),
            "params": self.params,
            "target_class": self.target_class,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FixtureSpec":
        return cls(
            kind=d["kind"],
            dims=tuple(d.get("dims", (64, 64))),
            params=dict(d.get("params", {})),
            target_class=d.get("target_class", "a"),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class ExpectedAttributes:
    lighting_score: float
    edge_density: float | None  # pinned exactly only where the pattern forces it
    lighting_cat: str
    bg_cat: str | None


def _gray(h: int, w: int, value: int) -> np.ndarray:
    return np.full((h, w, 3), value, dtype=np.uint8)


def generate_image(spec: FixtureSpec) -> tuple[np.ndarray, ExpectedAttributes]:
    """Render the pattern together with its analytically expected attributes.

    The lighting expectation comes from the construction's pixel-value
    counts, never from measuring the rendered array.
    """
    h, w = spec.dims
    p = spec.params
    if spec.kind == "constant":
        rgb = p.get("rgb")
        if rgb is not None:
            img = np.empty((h, w, 3), dtype=np.uint8)
            img[..., 0], img[..., 1], img[..., 2] = rgb
            v = float(max(rgb))
        else:
            value = int(p.get("value", 128))
            img = _gray(h, w, value)
            v = float(value)
        lcat, bcat = categorize_scores(v, 0.0)
        return img, ExpectedAttributes(v, 0.0, lcat, bcat)

    if spec.kind == "two_tone":
        top, bottom = int(p.get("top", 40)), int(p.get("bottom", 200))
        split = int(p.get("split_row", h // 2))
        if not 0 < split < h:
            raise DataError(f"split_row {split} outside (0, {h})")
        img = _gray(h, w, top)
        img[split:] = bottom
        score = (split * top + (h - split) * bottom) / h
        # a single boundary line cannot exceed 10% of pixels once h >= 32
        bcat = "simple" if h >= 32 else None
        return img, ExpectedAttributes(score, None, categorize_scores(score, 0.0)[0], bcat)

    if spec.kind == "step_edge":
        left, right = int(p.get("left", 0)), int(p.get("right", 255))
        column = int(p.get("column", w // 2))
        if not 0 < column < w:
            raise DataError(f"column {column} outside (0, {w})")
        img = _gray(h, w, left)
        img[:, column:] = right
        score = (column * left + (w - column) * right) / w
        bcat = "simple" if w >= 32 else None
        return img, ExpectedAttributes(score, None, categorize_scores(score, 0.0)[0], bcat)

    if spec.kind == "checkerboard":
        a, b = int(p.get("a", 0)), int(p.get("b", 255))
        tile = int(p.get("tile", 8))
        if h % (2 * tile) or w % (2 * tile):
            raise DataError(f"dims {spec.dims} must be multiples of 2*tile = {2 * tile}")
        yy, xx = np.indices((h, w))
        cell = ((yy // tile) + (xx // tile)) % 2
        img = np.repeat(np.where(cell == 0, a, b).astype(np.uint8)[..., None], 3, axis=2)
        score = (a + b) / 2  # equal pixel counts by construction
        # dense tile boundaries force the complex category for small tiles
        bcat = "complex" if tile <= 8 and abs(a - b) >= 60 else None
        return img, ExpectedAttributes(score, None, categorize_scores(score, 0.0)[0], bcat)

    # gradient: horizontal ramp, value per column from the ramp formula
    lo, hi = int(p.get("lo", 0)), int(p.get("hi", 255))
    cols = np.floor(lo + (hi - lo) * np.arange(w) / (w - 1) + 0.5).astype(np.uint8)
    img = np.repeat(np.tile(cols, (h, 1))[..., None], 3, axis=2)
    score = float(np.floor(lo + (hi - lo) * np.arange(w) / (w - 1) + 0.5).sum()) / w
    return img, ExpectedAttributes(score, None, categorize_scores(score, 0.0)[0], None)


def randomized_specs(n: int, seed: int, classes: tuple[str, ...] = ("a", "b")) -> list[FixtureSpec]:
    """Decisive-contrast fixture specs for detector-agreement testing.

    Gradient patterns are excluded: their edge category legitimately
    depends on detector scaling conventions, so no category is forced.
    """
    specs = []
    for i in range(n):
        rng = SampleRng(seed, i, STAGE_FIXTURE)
        kind = ("constant", "two_tone", "checkerboard", "step_edge")[rng.index(4)]
        target = classes[i % len(classes)]
        if kind == "constant":
            spec = FixtureSpec(kind, (64, 64), {"value": rng.index(256)}, target, i)
        elif kind == "two_tone":
            top = rng.index(160)
            spec = FixtureSpec(
                kind,
                (64, 64),
                {"top": top, "bottom": top + 80 + rng.index(256 - top - 80),
                 "split_row": 8 + rng.index(48)},
                target,
                i,
            )
        elif kind == "checkerboard":
            a = rng.index(160)
            tile = (4, 8)[rng.index(2)]
            spec = FixtureSpec(
                kind,
                (64, 64),
                {"a": a, "b": a + 80 + rng.index(256 - a - 80), "tile": tile},
                target,
                i,
            )
        else:
            left = rng.index(160)
            spec = FixtureSpec(
                kind,
                (64, 64),
                {"left": left, "right": left + 80 + rng.index(256 - left - 80),
                 "column": 8 + rng.index(48)},
                target,
                i,
            )
        specs.append(spec)
    return specs


def write_fixture_set(
    specs: list[FixtureSpec], out_dir: str | Path, split: str = "train"
) -> tuple[Manifest, Path]:
    """Render specs to PNG files plus a manifest and expected-values JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = []
    expected = {}
    for i, spec in enumerate(specs):
        sample_id = f"fix{i:04d}"
        img, exp = generate_image(spec)
        path = out_dir / f"{sample_id}.png"
        save_png(img, path)
        samples.append(SampleRecord(sample_id, str(path), spec.target_class, split))
        expected[sample_id] = {
            "spec": spec.to_dict(),
            "lighting_score": exp.lighting_score,
            "edge_density": exp.edge_density,
            "lighting_cat": exp.lighting_cat,
            "bg_cat": exp.bg_cat,
        }
    manifest = Manifest.from_samples(samples)
    write_manifest(manifest, out_dir / "manifest.csv")
    expected_path = out_dir / "expected.json"
    with expected_path.open("w", encoding="utf-8") as fh:
        json.dump(expected, fh, indent=2)
        fh.write("\n")
    return manifest, expected_path


# ---------------------------------------------------------------------------
# synthetic prediction sets with a counting oracle
# ---------------------------------------------------------------------------

Counts = dict[tuple[str, str, tuple[str, str]], int]


def generate_predictions(
    counts: Counts,
) -> tuple[list[PredictionRecord], Manifest, dict]:
    """Expand (true, pred, condition) -> count into records plus expectations.

    The expected report is produced by `count_report`, a deliberately
    naive per-sample tally kept independent of the evaluation module.
    """
    for key, n in counts.items():
        true, pred, cond = key
        if n < 0:
            raise DataError(f"negative count for {key}")
        if cond[0] not in LIGHTING_CATS or cond[1] not in BG_CATS:
            raise DataError(f"bad condition {cond!r}")
    labels = tuple(sorted({k[0] for k in counts} | {k[1] for k in counts}))
    samples = []
    preds = []
    rows = []  # (true, pred, cond) per sample, oracle input
    i = 0
    for key in sorted(counts):
        true, pred, cond = key
        env = EnvAttributes.from_scores(
            _SCORE_FOR_LIGHTING[cond[0]], _SCORE_FOR_BG[cond[1]]
        )
        for _ in range(counts[key]):
            sample_id = f"s{i:06d}"
            samples.append(
                SampleRecord(sample_id, f"{sample_id}.png", true, "test", env)
            )
            preds.append(PredictionRecord(sample_id, true, pred))
            rows.append((true, pred, cond))
            i += 1
    if not samples:
        raise DataError("no samples generated: all counts zero")
    manifest = Manifest(labels=labels, samples=tuple(samples))
    return preds, manifest, count_report(rows, labels)


def count_report(
    rows: list[tuple[str, str, tuple[str, str]]], labels: tuple[str, ...]
) -> dict:
    """Naive counting oracle over (true, pred, condition) triples."""
    conditions = [(lc, bc) for lc in LIGHTING_CATS for bc in BG_CATS]
    n = len(rows)

    dp_table: dict[str, dict] = {y: {} for y in labels}
    eo_table: dict[str, dict] = {y: {} for y in labels}
    per_intersection: dict[tuple, dict] = {}
    for y in labels:
        for cond in conditions:
            in_cond = [r for r in rows if r[2] == cond]
            pred_y = [r for r in in_cond if r[1] == y]
            dp_table[y][cond] = len(pred_y) / len(in_cond) if in_cond else None
            cell = [r for r in in_cond if r[0] == y]
            correct = [r for r in cell if r[1] == y]
            eo_table[y][cond] = len(correct) / len(cell) if cell else None
            support = len(cell)
            accuracy = len(correct) / support if support else None
            precision = len(correct) / len(pred_y) if pred_y else None
            recall = accuracy
            f1 = None
            if precision is not None and recall is not None and precision + recall > 0:
                f1 = 2 * precision * recall / (precision + recall)
            per_intersection[(y,) + cond] = {
                "support": support,
                "accuracy": accuracy,
                "precision": precision,
                "recall": recall,
                "f1": f1,
            }

    per_class: dict[str, dict] = {}
    for y in labels:
        tp = len([r for r in rows if r[0] == y and r[1] == y])
        fp = len([r for r in rows if r[0] != y and r[1] == y])
        fn = len([r for r in rows if r[0] == y and r[1] != y])
        tn = n - tp - fp - fn
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else None
        recall = tp / support if support else None
        f1 = None
        if precision is not None and recall is not None and precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[y] = {
            "support": support,
            "accuracy": (tp + tn) / n,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }

    confusion = [
        [len([r for r in rows if r[0] == ti and r[1] == pj]) for pj in labels]
        for ti in labels
    ]

    dp_defined = [v for row in dp_table.values() for v in row.values() if v is not None]
    eo_defined = [v for row in eo_table.values() for v in row.values() if v is not None]
    return {
        "n": n,
        "overall_accuracy": len([r for r in rows if r[0] == r[1]]) / n,
        "dp_table": dp_table,
        "dp_disparity": max(dp_defined) - min(dp_defined),
        "eo_table": eo_table,
        "eo_disparity": max(eo_defined) - min(eo_defined),
        "dp_by_class": {y: len([r for r in rows if r[1] == y]) / n for y in labels},
        "eo_by_class": {
            y: (per_class[y]["recall"]) for y in labels
        },
        "per_intersection": per_intersection,
        "per_class": per_class,
        "confusion": confusion,
    }


def random_prediction_counts(seed: int, max_samples: int = 1000) -> Counts:
    """Random fixture counts: 2-5 classes, up to 4 conditions, some zeros."""
    rng = SampleRng(seed, 1, STAGE_FIXTURE)
    n_classes = 2 + rng.index(4)
    labels = tuple(f"class{i}" for i in range(n_classes))
    conditions = [(lc, bc) for lc in LIGHTING_CATS for bc in BG_CATS]
    n_conditions = 1 + rng.index(4)
    active = conditions[:n_conditions]
    counts: Counts = {}
    budget = 20 + rng.index(max_samples - 19)
    remaining = budget
    while remaining > 0:
        true = labels[rng.index(n_classes)]
        # skew toward correct predictions so confusion matrices look real
        pred = true if rng.random() < 0.7 else labels[rng.index(n_classes)]
        cond = active[rng.index(len(active))]
        take = min(remaining, 1 + rng.index(25))
        counts[(true, pred, cond)] = counts.get((true, pred, cond), 0) + take
        remaining -= take
    return counts
