"""Aggregation of externally computed attribution artifacts.

Saliency rasters are HxW nonnegative matrices; region masks are HxW
integer matrices with 0 = background, 1 = object, 2 = transition.
Both arrive one file per sample, named ``<sample_id>.npy`` or
``<sample_id>.csv``, and are grouped by intersection via the manifest.
Feature-attribution vectors (one row per sample) are screened for
environmental reliance by correlating each feature's magnitude with
the environmental attribute values across samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .manifest import Manifest
from . import stats as statskit

MASK_BACKGROUND = 0
MASK_OBJECT = 1
MASK_TRANSITION = 2


def load_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path)
    elif path.suffix == ".csv":
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    else:
        raise DataError(f"{path}: expected .npy or .csv matrix")
    if arr.ndim != 2:
        raise DataError(f"{path}: expected a 2-D matrix, got shape {arr.shape}")
    return np.asarray(arr, dtype=np.float64)


def load_matrix_dir(directory: str | Path) -> dict[str, np.ndarray]:
    """Read every .npy/.csv matrix in a directory, keyed by file stem."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory}: not a directory")
    out: dict[str, np.ndarray] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix in (".npy", ".csv"):
            if path.stem in out:
                raise DataError(f"duplicate matrices for sample {path.stem!r}")
            out[path.stem] = load_matrix(path)
    if not out:
        raise DataError(f"{directory}: no .npy or .csv matrices found")
    return out


def mass_split(
    raster: np.ndarray, mask: np.ndarray
) -> tuple[float, float, float]:
    """Proportion of total saliency mass in (object, background, transition)."""
    raster = np.asarray(raster, dtype=np.float64)
    mask = np.asarray(mask)
    if raster.shape != mask.shape:
        raise DataError(f"raster {raster.shape} and mask {mask.shape} differ")
    if (raster < 0).any():
        raise DataError("saliency raster has negative values")
    bad = set(np.unique(mask)) - {MASK_BACKGROUND, MASK_OBJECT, MASK_TRANSITION}
    if bad:
        raise DataError(f"mask has labels outside {{0,1,2}}: {sorted(bad)}")
    total = raster.sum()
    if total <= 0:
        raise DataError("zero total saliency mass")
    obj = float(raster[mask == MASK_OBJECT].sum() / total)
    bg = float(raster[mask == MASK_BACKGROUND].sum() / total)
    trans = float(raster[mask == MASK_TRANSITION].sum() / total)
    return obj, bg, trans


def condition_similarity(
    rasters_a: list[np.ndarray], rasters_b: list[np.ndarray]
) -> float:
    """Cosine similarity between the element-wise mean rasters of two groups."""
    if not rasters_a or not rasters_b:
        raise DataError("both raster groups must be nonempty")
    shapes = {a.shape for a in rasters_a} | {b.shape for b in rasters_b}
    if len(shapes) != 1:
        raise DataError(f"rasters have mixed shapes: {sorted(shapes)}")
    mean_a = np.mean([np.asarray(a, dtype=np.float64) for a in rasters_a], axis=0).ravel()
    mean_b = np.mean([np.asarray(b, dtype=np.float64) for b in rasters_b], axis=0).ravel()
    norm_a = math.sqrt(float(mean_a @ mean_a))
    norm_b = math.sqrt(float(mean_b @ mean_b))
    if norm_a == 0 or norm_b == 0:
        raise DataError("zero-norm mean raster")
    return float(mean_a @ mean_b) / (norm_a * norm_b)


@dataclass(frozen=True)
class EnvShareResult:
    share: float
    environmental_features: tuple[int, ...]
    skipped_features: tuple[int, ...]  # constant columns, correlation undefined


def env_attribution_share(
    attribs: np.ndarray,
    env_values: np.ndarray,
    corr_threshold: float = 0.5,
) -> EnvShareResult:
    """Fraction of attribution magnitude on environment-tracking features.

    A feature is environmental when the largest |Pearson r| between its
    per-sample magnitude and any environmental attribute exceeds the
    threshold. The returned share is the per-sample environmental
    fraction averaged over samples.
    """
    attribs = np.asarray(attribs, dtype=np.float64)
    env_values = np.asarray(env_values, dtype=np.float64)
    if attribs.ndim != 2 or env_values.ndim != 2:
        raise DataError("attributions and env values must be 2-D (samples x columns)")
    if attribs.shape[0] != env_values.shape[0]:
        raise DataError(
            f"sample count mismatch: {attribs.shape[0]} vs {env_values.shape[0]}"
        )
    if attribs.shape[0] < 3:
        raise DataError(f"need at least 3 samples, got {attribs.shape[0]}")
    if (attribs < 0).any():
        raise DataError("attribution magnitudes must be nonnegative")

    environmental: list[int] = []
    skipped: list[int] = []
    for j in range(attribs.shape[1]):
        col = attribs[:, j]
        if np.all(col == col[0]):
            skipped.append(j)
            continue
        best = 0.0
        for k in range(env_values.shape[1]):
            env_col = env_values[:, k]
            if np.all(env_col == env_col[0]):
                continue
            r, _ = statskit.pearson(col.tolist(), env_col.tolist())
            best = max(best, abs(r))
        if best > corr_threshold:
            environmental.append(j)

    totals = attribs.sum(axis=1)
    if (totals <= 0).any():
        raise DataError("some samples have zero total attribution magnitude")
    env_mass = attribs[:, environmental].sum(axis=1) if environmental else np.zeros(
        attribs.shape[0]
    )
    share = float(np.mean(env_mass / totals))
    return EnvShareResult(
        share=share,
        environmental_features=tuple(environmental),
        skipped_features=tuple(skipped),
    )


def intersection_mass_summary(
    manifest: Manifest,
    rasters: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
) -> list[dict]:
    """Mean mass split per intersection, over samples with both artifacts."""
    by_id = manifest.by_id()
    rows: dict[tuple, list[tuple[float, float, float]]] = {}
    for sample_id in sorted(rasters):
        if sample_id not in masks:
            raise DataError(f"raster without mask for sample {sample_id!r}")
        rec = by_id.get(sample_id)
        if rec is None:
            raise DataError(f"raster for unknown sample {sample_id!r}")
        if rec.env is None:
            raise DataError(f"sample {sample_id!r} lacks environmental attributes")
        key = (rec.class_label, rec.env.lighting_cat, rec.env.bg_cat)
        rows.setdefault(key, []).append(mass_split(rasters[sample_id], masks[sample_id]))
    summary = []
    for key in sorted(rows):
        splits = rows[key]
        n = len(splits)
        summary.append(
            {
                "class": key[0],
                "lighting": key[1],
                "background": key[2],
                "n": n,
                "object": sum(s[0] for s in splits) / n,
                "background_mass": sum(s[1] for s in splits) / n,
                "transition": sum(s[2] for s in splits) / n,
            }
        )
    return summary


def lighting_similarity_by_class(
    manifest: Manifest, rasters: dict[str, np.ndarray]
) -> dict[str, float | None]:
    """Cosine similarity of mean saliency between low and high lighting.

    None for classes lacking rasters under one of the two conditions.
    """
    by_id = manifest.by_id()
    groups: dict[str, dict[str, list[np.ndarray]]] = {
        c: {"low": [], "high": []} for c in manifest.labels
    }
    for sample_id in sorted(rasters):
        rec = by_id.get(sample_id)
        if rec is None:
            raise DataError(f"raster for unknown sample {sample_id!r}")
        if rec.env is None:
            raise DataError(f"sample {sample_id!r} lacks environmental attributes")
        groups[rec.class_label][rec.env.lighting_cat].append(rasters[sample_id])
    out: dict[str, float | None] = {}
    for label in manifest.labels:
        low, high = groups[label]["low"], groups[label]["high"]
        out[label] = condition_similarity(low, high) if low and high else None
    return out
