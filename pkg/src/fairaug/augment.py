"""Bias-weighted augmentation: one weight-scaled variant per training image.

For a sample of class y with weight w, the transform intensities are

* rotation          uniform(-30w, 30w) degrees
* scale             uniform(0.8, 1.0 + 0.2w)
* translation       magnitude uniform(0, 0.2w * min(H, W)) per axis,
                    independent random sign per axis
* horizontal flip   probability 0.5
* lighting          applied with probability w / max(w); brightness factor
                    uniform(0.5, 1.5), contrast factor uniform(0.7, 1.3)
* occlusion         floor(0.15 * H * w) black 10x10 patches
* gaussian noise    std 0.1w on pixels normalized to [0, 1]

Stages run in order spatial -> lighting -> occlusion -> noise. Every
stage converts back to 8-bit once, rounding half away from zero. All
draws come from per-sample counter-based streams, so outputs depend
only on (manifest, weights, master_seed) and never on worker count.

Per-sample draw order (part of the reproducibility contract):
params stream: rotation, scale, |tx|, |ty|, sign x, sign y, flip,
lighting gate, then brightness and contrast only when the gate passes.
Occlusion stream: row, column alternating per patch. Noise stream: one
gaussian per channel value in row-major order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .images import load_image, save_png, validate_image
from .intersections import ClassWeights
from .manifest import Manifest, SampleRecord, write_manifest
from .rng import (
    GENERATOR_NAME,
    STAGE_NOISE,
    STAGE_OCCLUSION,
    STAGE_PARAMS,
    SampleRng,
)

ROTATION_SPAN_DEG = 30.0
SCALE_MIN = 0.8
SCALE_SPAN = 0.2
TRANSLATE_FRAC = 0.2
BRIGHTNESS_RANGE = (0.5, 1.5)
CONTRAST_RANGE = (0.7, 1.3)
OCCLUSION_RATE = 0.15
PATCH_SIZE = 10
OCCLUSION_FILL = 0
NOISE_SCALE = 0.1


@dataclass(frozen=True)
class AugmentationParams:
    rotation_deg: float
    scale: float
    translate_px: tuple[float, float]
    flip: bool
    lighting_applied: bool
    brightness: float
    contrast: float
    occlusion_patches: int
    noise_sigma: float


def occlusion_patch_count(height: int, weight: float) -> int:
    return int(math.floor(OCCLUSION_RATE * height * weight))


def sample_params(
    w: float,
    img_dims: tuple[int, int],
    rng: SampleRng,
    w_max: float | None = None,
    flip_enabled: bool = True,
) -> AugmentationParams:
    """Draw one variant's transform parameters for a class of weight ``w``."""
    if w <= 0:
        raise ValueError(f"weight must be positive, got {w}")
    h, width = img_dims
    w_max = w if w_max is None else w_max
    rotation = rng.uniform(-ROTATION_SPAN_DEG * w, ROTATION_SPAN_DEG * w)
    scale = rng.uniform(SCALE_MIN, 1.0 + SCALE_SPAN * w)
    bound = TRANSLATE_FRAC * w * min(h, width)
    tx = rng.uniform(0.0, bound)
    ty = rng.uniform(0.0, bound)
    if rng.random() < 0.5:
        tx = -tx
    if rng.random() < 0.5:
        ty = -ty
    flip = flip_enabled and rng.random() < 0.5
    lighting_applied = rng.random() < w / w_max
    brightness = contrast = 1.0
    if lighting_applied:
        brightness = rng.uniform(*BRIGHTNESS_RANGE)
        contrast = rng.uniform(*CONTRAST_RANGE)
    return AugmentationParams(
        rotation_deg=rotation,
        scale=scale,
        translate_px=(tx, ty),
        flip=flip,
        lighting_applied=lighting_applied,
        brightness=brightness,
        contrast=contrast,
        occlusion_patches=occlusion_patch_count(h, w),
        noise_sigma=NOISE_SCALE * w,
    )


def _round_u8(values: np.ndarray) -> np.ndarray:
    # half away from zero; pixel values are nonnegative
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def apply_spatial(img: np.ndarray, p: AugmentationParams) -> np.ndarray:
    """Flip, rotate about center, scale, translate; bilinear, black fill."""
    validate_image(img)
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(p.rotation_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    tx, ty = p.translate_px

    yo, xo = np.indices((h, w), dtype=np.float64)
    xq = xo - tx - cx
    yq = yo - ty - cy
    xi = (cos_t * xq + sin_t * yq) / p.scale + cx
    yi = (-sin_t * xq + cos_t * yq) / p.scale + cy
    if p.flip:
        xi = (w - 1) - xi

    x0 = np.floor(xi).astype(np.int64)
    y0 = np.floor(yi).astype(np.int64)
    fx = xi - x0
    fy = yi - y0
    out = np.zeros((h, w, 3), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xs = x0 + dx
            ys = y0 + dy
            inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy) * inside
            xs_c = np.clip(xs, 0, w - 1)
            ys_c = np.clip(ys, 0, h - 1)
            out += weight[..., None] * img[ys_c, xs_c].astype(np.float64)
    return _round_u8(out)


def apply_lighting(
    img: np.ndarray, brightness: float, contrast: float, pivot: str = "mean"
) -> np.ndarray:
    """v -> ((v*brightness) - mu)*contrast + mu, clamped to [0, 255].

    The pivot mu is the post-brightness mean intensity of the whole
    image ("mean") or the fixed mid-scale 128 ("mid").
    """
    validate_image(img)
    if pivot not in ("mean", "mid"):
        raise ValueError(f"pivot must be 'mean' or 'mid', got {pivot!r}")
    bright = img.astype(np.float64) * brightness
    mu = bright.mean() if pivot == "mean" else 128.0
    return _round_u8((bright - mu) * contrast + mu)


def apply_occlusion(img: np.ndarray, n_patches: int, rng: SampleRng) -> np.ndarray:
    """Black out ``n_patches`` 10x10 regions at random top-left corners.

    Corners are uniform over the whole image; patches that hang over
    the border are clipped. Patches may overlap.
    """
    validate_image(img)
    out = img.copy()
    if n_patches <= 0:
        return out
    h, w = img.shape[:2]
    u = rng.random(2 * n_patches)
    rows = np.minimum((u[0::2] * h).astype(np.int64), h - 1)
    cols = np.minimum((u[1::2] * w).astype(np.int64), w - 1)
    for r, c in zip(rows, cols):
        out[r : r + PATCH_SIZE, c : c + PATCH_SIZE] = OCCLUSION_FILL
    return out


def apply_noise(img: np.ndarray, sigma: float, rng: SampleRng) -> np.ndarray:
    """Additive gaussian noise with std ``sigma`` on the [0, 1] pixel scale."""
    validate_image(img)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return img.copy()
    noise = rng.normal(img.size, sigma).reshape(img.shape)
    noisy = np.clip(img.astype(np.float64) / 255.0 + noise, 0.0, 1.0) * 255.0
    return _round_u8(noisy)


def augment_image(
    img: np.ndarray,
    weight: float,
    w_max: float,
    sample_index: int,
    master_seed: int,
    *,
    flip_enabled: bool = True,
    contrast_pivot: str = "mean",
) -> np.ndarray:
    """Run the full per-sample pipeline: spatial, lighting, occlusion, noise."""
    dims = (img.shape[0], img.shape[1])
    params = sample_params(
        weight,
        dims,
        SampleRng(master_seed, sample_index, STAGE_PARAMS),
        w_max=w_max,
        flip_enabled=flip_enabled,
    )
    out = apply_spatial(img, params)
    if params.lighting_applied:
        out = apply_lighting(out, params.brightness, params.contrast, contrast_pivot)
    out = apply_occlusion(
        out, params.occlusion_patches, SampleRng(master_seed, sample_index, STAGE_OCCLUSION)
    )
    out = apply_noise(
        out, params.noise_sigma, SampleRng(master_seed, sample_index, STAGE_NOISE)
    )
    return out


def augment_dataset(
    manifest: Manifest,
    weights: ClassWeights,
    master_seed: int,
    out_dir: str | Path,
    *,
    split: str = "train",
    flip_enabled: bool = True,
    contrast_pivot: str = "mean",
    threads: int = 1,
    extra_config: dict | None = None,
) -> Manifest:
    """Materialize the doubled training set into ``out_dir``.

    Writes one ``<source_id>_aug.png`` per source image, the combined
    output manifest as ``manifest.csv``, and a ``run_config.json``
    recording every knob needed to reproduce the bytes. Returns the
    output manifest (originals plus variants, sorted by source id).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = sorted(manifest.samples_in(split), key=lambda r: r.id)
    if not records:
        raise DataError(f"no samples in split {split!r}")
    missing = sorted({r.class_label for r in records} - set(weights.weights))
    if missing:
        raise DataError(f"no weight for classes: {', '.join(missing)}")
    w_max = weights.max_weight

    def one(indexed: tuple[int, SampleRecord]) -> SampleRecord:
        idx, rec = indexed
        img = load_image(rec.image_path)
        out = augment_image(
            img,
            weights[rec.class_label],
            w_max,
            idx,
            master_seed,
            flip_enabled=flip_enabled,
            contrast_pivot=contrast_pivot,
        )
        aug_path = out_dir / f"{rec.id}_aug.png"
        save_png(out, aug_path)
        return SampleRecord(
            id=f"{rec.id}_aug",
            image_path=str(aug_path),
            class_label=rec.class_label,
            split=split,
            env=None,
        )

    jobs = list(enumerate(records))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            augmented = list(pool.map(one, jobs))
    else:
        augmented = [one(job) for job in jobs]

    ordered: list[SampleRecord] = []
    for rec, aug in zip(records, augmented):
        ordered.append(rec)
        ordered.append(aug)
    out_manifest = Manifest(labels=manifest.labels, samples=tuple(ordered))
    write_manifest(out_manifest, out_dir / "manifest.csv")

    from . import __version__

    run_config = {
        "operation": "augment_dataset",
        "version": __version__,
        "master_seed": master_seed,
        "split": split,
        "flip_enabled": flip_enabled,
        "contrast_pivot": contrast_pivot,
        "weights": {c: weights.weights[c] for c in sorted(weights.weights)},
        "class_counts": {c: weights.counts[c] for c in sorted(weights.counts)},
        "rng_generator": GENERATOR_NAME,
        "transform_order": ["spatial", "lighting", "occlusion", "noise"],
        "translation_dim": "min(height, width)",
        "noise_sigma_scale": "std 0.1*w on [0,1] pixels",
        "occlusion": {
            "patch_size": PATCH_SIZE,
            "fill": OCCLUSION_FILL,
            "count_rule": "floor(0.15 * height * w)",
        },
        "interpolation": "bilinear, black fill",
        "rounding": "half away from zero, once per stage",
    }
    if extra_config:
        run_config.update(extra_config)
    with (out_dir / "run_config.json").open("w", encoding="utf-8") as fh:
        json.dump(run_config, fh, indent=2)
        fh.write("\n")
    return out_manifest
