"""Environmental attribute extraction from decoded images.

Two attributes per image:

* lighting score: mean of the HSV value channel, i.e. the per-pixel
  max(R, G, B), averaged over the image. Range [0, 255].
* background complexity: fraction of pixels marked as edges by Canny
  detection. Range [0, 1].

Scores below 85 categorize as "low" lighting; densities above 0.1
categorize as "complex" background (strict inequalities, so the
boundary values land on "high" and "simple").
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DecodeError
from .images import load_image, resize_bilinear, validate_image
from .manifest import EnvAttributes, Manifest, SampleRecord, categorize_scores

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class CannyParams:
    """Edge detector configuration, recorded in every report.

    Thresholds apply to the gradient magnitude after it is rescaled so
    the image's strongest gradient maps to 255.
    """

    sigma: float = 1.4
    kernel_size: int = 5
    low: float = 50.0
    high: float = 150.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and >= 3")
        if not 0 <= self.low <= self.high:
            raise ValueError("need 0 <= low <= high")

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "kernel_size": self.kernel_size,
            "low": self.low,
            "high": self.high,
        }


def lighting_score(img: np.ndarray) -> float:
    """Mean HSV V-channel over all pixels, on the 0-255 scale."""
    validate_image(img)
    return float(img.max(axis=2).mean(dtype=np.float64))


def _gaussian_kernel(sigma: float, size: int) -> np.ndarray:
    r = size // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    return k / k.sum()


def _to_gray(img: np.ndarray) -> np.ndarray:
    # luma weights, rounded to nearest integer
    return np.floor(img.astype(np.float64) @ _LUMA + 0.5)


def canny_edges(img: np.ndarray, params: CannyParams = CannyParams()) -> np.ndarray:
    """Binary edge map: blur -> Sobel -> NMS -> double-threshold hysteresis.

    Convolution borders replicate the edge row/column; the outermost
    pixel ring is never marked as an edge. Non-maximum suppression
    compares along the quantized gradient direction with an asymmetric
    tie-break (> on one side, >= on the other) so a symmetric blurred
    step keeps a single-pixel line.
    """
    validate_image(img)
    gray = _to_gray(img)
    h, w = gray.shape
    smoothed = ndimage.convolve(
        gray, _gaussian_kernel(params.sigma, params.kernel_size), mode="nearest"
    )
    gx = ndimage.convolve(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return np.zeros((h, w), dtype=bool)
    mag *= 255.0 / peak

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")

    def neighbor(dr: int, dc: int) -> np.ndarray:
        return padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    direction_bins = (
        ((angle < 22.5) | (angle >= 157.5), (0, 1), (0, -1)),  # horizontal gradient
        ((angle >= 22.5) & (angle < 67.5), (1, -1), (-1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0), (-1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (-1, -1), (1, 1)),
    )
    keep = np.zeros((h, w), dtype=bool)
    for sel, (r1, c1), (r2, c2) in direction_bins:
        keep |= sel & (mag > neighbor(r1, c1)) & (mag >= neighbor(r2, c2))
    keep &= mag > 0
    keep[0, :] = keep[-1, :] = False
    keep[:, 0] = keep[:, -1] = False

    strong = keep & (mag >= params.high)
    weak = keep & (mag >= params.low)
    if not strong.any():
        return np.zeros((h, w), dtype=bool)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep_component = np.zeros(n + 1, dtype=bool)
    keep_component[np.unique(labels[strong])] = True
    keep_component[0] = False
    return keep_component[labels]


def edge_density(img: np.ndarray, params: CannyParams = CannyParams()) -> float:
    """Fraction of pixels on Canny edges; 0 exactly for constant images."""
    edges = canny_edges(img, params)
    return float(edges.sum(dtype=np.int64)) / edges.size


def categorize(lighting: float, bg_complexity: float) -> tuple[str, str]:
    """Map continuous scores to (lighting_cat, bg_cat)."""
    if not 0.0 <= lighting <= 255.0:
        raise ValueError(f"lighting score {lighting} outside [0, 255]")
    if not 0.0 <= bg_complexity <= 1.0:
        raise ValueError(f"bg complexity {bg_complexity} outside [0, 1]")
    return categorize_scores(lighting, bg_complexity)


def extract_attributes(
    img: np.ndarray, params: CannyParams = CannyParams()
) -> EnvAttributes:
    return EnvAttributes.from_scores(lighting_score(img), edge_density(img, params))


@dataclass(frozen=True)
class ExtractionResult:
    manifest: Manifest
    failures: tuple[tuple[str, str], ...]  # (sample id, message)


def extract_all(
    manifest: Manifest,
    params: CannyParams = CannyParams(),
    *,
    on_error: str = "fail",
    resize_to: int | None = None,
    threads: int = 1,
) -> ExtractionResult:
    """Fill EnvAttributes for every sample in the manifest.

    Deterministic: output is a pure function of the image files and
    params, independent of thread count. ``on_error="skip"`` leaves the
    failing samples without attributes and reports them; ``"fail"``
    raises on the first failure (by manifest order).
    """
    if on_error not in ("fail", "skip"):
        raise ValueError(f"on_error must be 'fail' or 'skip', got {on_error!r}")

    def one(rec: SampleRecord):
        try:
            img = load_image(rec.image_path)
            if resize_to is not None:
                img = resize_bilinear(img, resize_to, resize_to)
            return rec.id, extract_attributes(img, params), None
        except (DecodeError, ValueError) as exc:
            return rec.id, None, f"{rec.id}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, manifest.samples))
    else:
        results = [one(rec) for rec in manifest.samples]

    env_by_id = {}
    failures = []
    for sample_id, env, message in results:
        if message is not None:
            if on_error == "fail":
                raise DecodeError(message)
            failures.append((sample_id, message))
        else:
            env_by_id[sample_id] = env

    new_samples = tuple(
        rec.with_env(env_by_id[rec.id]) if rec.id in env_by_id else rec
        for rec in manifest.samples
    )
    return ExtractionResult(
        manifest=Manifest(labels=manifest.labels, samples=new_samples),
        failures=tuple(failures),
    )
