"""Class x environment intersection statistics and augmentation weights.

An intersection is a (class, lighting, background) cell; a manifest
with C classes has exactly C*2*2 cells. Augmentation weights are
inverse-representation per class: w = N / (n * C), so uniform class
counts give w = 1 everywhere and n*w = N/C holds for every class.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .manifest import BG_CATS, LIGHTING_CATS, Manifest
from . import stats as statskit


@dataclass(frozen=True, order=True)
class IntersectionKey:
    class_label: str
    lighting_cat: str
    bg_cat: str

    def __str__(self) -> str:
        return f"{self.class_label}/{self.lighting_cat}/{self.bg_cat}"


@dataclass(frozen=True)
class IntersectionStats:
    key: IntersectionKey
    count: int
    proportion: float


@dataclass(frozen=True)
class ClassWeights:
    weights: dict[str, float]
    counts: dict[str, int]
    total: int

    def __getitem__(self, class_label: str) -> float:
        return self.weights[class_label]

    @property
    def max_weight(self) -> float:
        return max(self.weights.values())


def all_keys(labels: tuple[str, ...]) -> list[IntersectionKey]:
    """The full C*2*2 key space in (label order, low/high, simple/complex)."""
    return [
        IntersectionKey(c, lc, bc)
        for c in labels
        for lc in LIGHTING_CATS
        for bc in BG_CATS
    ]


def enumerate_intersections(manifest: Manifest, split: str) -> list[IntersectionStats]:
    """Count every intersection cell in the split; zero cells included.

    Requires extracted attributes on every sample of the split.
    """
    records = manifest.samples_in(split)
    missing = [r.id for r in records if r.env is None]
    if missing:
        raise DataError(
            f"samples missing environmental attributes: {', '.join(missing[:10])}"
            + ("..." if len(missing) > 10 else "")
        )
    if not records:
        raise DataError(f"no samples in split {split!r}")
    n = len(records)
    counts: dict[IntersectionKey, int] = {k: 0 for k in all_keys(manifest.labels)}
    for rec in records:
        counts[IntersectionKey(rec.class_label, rec.env.lighting_cat, rec.env.bg_cat)] += 1
    return [
        IntersectionStats(key=k, count=c, proportion=c / n) for k, c in counts.items()
    ]


def compute_class_weights(manifest: Manifest, split: str = "train") -> ClassWeights:
    """Inverse-representation weights w = N / (n * C) over the split."""
    counts = manifest.class_counts(split)
    n_total = sum(counts.values())
    if n_total == 0:
        raise DataError(f"no samples in split {split!r}")
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise DataError(f"classes with no samples in {split!r}: {', '.join(empty)}")
    c = len(manifest.labels)
    weights = {label: n_total / (n * c) for label, n in counts.items()}
    return ClassWeights(weights=weights, counts=counts, total=n_total)


def representation_correlation(
    intersections: list[IntersectionStats],
    accuracy_by_key: dict[IntersectionKey, float],
) -> tuple[float, float]:
    """Pearson r (and two-sided p) between cell proportion and cell accuracy.

    Zero-count cells are excluded: their accuracy is undefined.
    """
    pairs = [
        (s.proportion, accuracy_by_key[s.key])
        for s in intersections
        if s.count > 0 and s.key in accuracy_by_key
    ]
    if len(pairs) < 3:
        raise DataError(f"need at least 3 populated cells with accuracy, got {len(pairs)}")
    xs = [p for p, _ in pairs]
    ys = [a for _, a in pairs]
    return statskit.pearson(xs, ys)
