"""Dataset manifest: the record schema plus CSV ingestion/serialization.

A manifest is a headered CSV with columns ``id,path,class,split`` and,
once environmental attributes have been extracted, four more columns
``lighting_score,bg_complexity,lighting_cat,bg_cat``. Missing attribute
cells mean "not yet extracted" and are written as empty strings.

The class set is the sorted set of distinct labels seen in the file;
the Manifest object pins that ordering so class indices are stable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

SPLITS = ("train", "val", "test")
LIGHTING_CATS = ("low", "high")
BG_CATS = ("simple", "complex")

# categorization thresholds: lighting on the 0-255 V-channel scale,
# background complexity as an edge-pixel fraction
LIGHTING_THRESHOLD = 85.0
BG_THRESHOLD = 0.1

_BASE_COLUMNS = ["id", "path", "class", "split"]
_ENV_COLUMNS = ["lighting_score", "bg_complexity", "lighting_cat", "bg_cat"]


def categorize_scores(lighting_score: float, bg_complexity: float) -> tuple[str, str]:
    """Threshold the continuous scores; boundaries go to high/simple."""
    lighting_cat = "low" if lighting_score < LIGHTING_THRESHOLD else "high"
    bg_cat = "complex" if bg_complexity > BG_THRESHOLD else "simple"
    return lighting_cat, bg_cat


@dataclass(frozen=True)
class EnvAttributes:
    lighting_score: float
    bg_complexity: float
    lighting_cat: str
    bg_cat: str

    def __post_init__(self):
        if not 0.0 <= self.lighting_score <= 255.0:
            raise ManifestError(f"lighting_score {self.lighting_score} outside [0, 255]")
        if not 0.0 <= self.bg_complexity <= 1.0:
            raise ManifestError(f"bg_complexity {self.bg_complexity} outside [0, 1]")
        expected = categorize_scores(self.lighting_score, self.bg_complexity)
        if (self.lighting_cat, self.bg_cat) != expected:
            raise ManifestError(
                f"categories {(self.lighting_cat, self.bg_cat)} inconsistent with "
                f"scores {(self.lighting_score, self.bg_complexity)}; expected {expected}"
            )

    @classmethod
    def from_scores(cls, lighting_score: float, bg_complexity: float) -> "EnvAttributes":
        lcat, bcat = categorize_scores(lighting_score, bg_complexity)
        return cls(lighting_score, bg_complexity, lcat, bcat)

    @property
    def condition(self) -> tuple[str, str]:
        return (self.lighting_cat, self.bg_cat)


@dataclass(frozen=True)
class SampleRecord:
    id: str
    image_path: str
    class_label: str
    split: str
    env: EnvAttributes | None = None

    def with_env(self, env: EnvAttributes) -> "SampleRecord":
        return SampleRecord(self.id, self.image_path, self.class_label, self.split, env)


@dataclass(frozen=True)
class Manifest:
    labels: tuple[str, ...]
    samples: tuple[SampleRecord, ...]
    label_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ManifestError(f"need at least 2 classes, got {len(self.labels)}")
        if len(set(self.labels)) != len(self.labels):
            raise ManifestError("duplicate entries in label set")
        seen: set[str] = set()
        for rec in self.samples:
            if rec.id in seen:
                raise ManifestError(f"duplicate sample id {rec.id!r}")
            seen.add(rec.id)
            if rec.class_label not in self.labels:
                raise ManifestError(
                    f"sample {rec.id!r} has unknown class {rec.class_label!r}"
                )
            if rec.split not in SPLITS:
                raise ManifestError(f"sample {rec.id!r} has unknown split {rec.split!r}")
        object.__setattr__(self, "label_index", {c: i for i, c in enumerate(self.labels)})

    @classmethod
    def from_samples(cls, samples: list[SampleRecord] | tuple[SampleRecord, ...]) -> "Manifest":
        """Build with the implicit label set: sorted distinct sample labels."""
        labels = tuple(sorted({s.class_label for s in samples}))
        if not labels:
            raise ManifestError("empty label set")
        return cls(labels=labels, samples=tuple(samples))

    def samples_in(self, split: str) -> tuple[SampleRecord, ...]:
        if split not in SPLITS:
            raise ManifestError(f"unknown split {split!r}")
        return tuple(s for s in self.samples if s.split == split)

    def split_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for rec in self.samples:
            counts[rec.split] += 1
        return counts

    def class_counts(self, split: str | None = None) -> dict[str, int]:
        counts = {c: 0 for c in self.labels}
        for rec in self.samples:
            if split is None or rec.split == split:
                counts[rec.class_label] += 1
        return counts

    def by_id(self) -> dict[str, SampleRecord]:
        return {s.id: s for s in self.samples}

    def has_env(self, split: str | None = None) -> bool:
        recs = self.samples if split is None else self.samples_in(split)
        return all(s.env is not None for s in recs)


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest CSV.

    Raises ManifestError for malformed rows, duplicate ids, bad splits,
    or an empty label set.
    """
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty label set (no rows)") from None
        if header == _BASE_COLUMNS:
            has_env_cols = False
        elif header == _BASE_COLUMNS + _ENV_COLUMNS:
            has_env_cols = True
        else:
            raise ManifestError(f"{path}: unexpected header {header!r}")
        samples: list[SampleRecord] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ManifestError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            env = None
            if has_env_cols and any(cell != "" for cell in row[4:]):
                if any(cell == "" for cell in row[4:]):
                    raise ManifestError(
                        f"{path}:{lineno}: partially filled attribute columns"
                    )
                try:
                    score = float(row[4])
                    density = float(row[5])
                except ValueError as exc:
                    raise ManifestError(f"{path}:{lineno}: {exc}") from None
                if row[6] not in LIGHTING_CATS or row[7] not in BG_CATS:
                    raise ManifestError(
                        f"{path}:{lineno}: bad category {row[6]!r}/{row[7]!r}"
                    )
                env = EnvAttributes(score, density, row[6], row[7])
            samples.append(SampleRecord(row[0], row[1], row[2], row[3], env))
    if not samples:
        raise ManifestError(f"{path}: empty label set (no samples)")
    return Manifest.from_samples(samples)


def write_manifest(m: Manifest, path: str | Path) -> None:
    """Write CSV (LF newlines, RFC 4180 quoting). load(write(m)) == m."""
    path = Path(path)
    with_env = any(s.env is not None for s in m.samples)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_BASE_COLUMNS + (_ENV_COLUMNS if with_env else []))
        for rec in m.samples:
            row = [rec.id, rec.image_path, rec.class_label, rec.split]
            if with_env:
                if rec.env is None:
                    row += ["", "", "", ""]
                else:
                    row += [
                        repr(rec.env.lighting_score),
                        repr(rec.env.bg_complexity),
                        rec.env.lighting_cat,
                        rec.env.bg_cat,
                    ]
            writer.writerow(row)
