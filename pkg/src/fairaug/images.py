"""Image decode/encode helpers. Images are HxWx3 uint8 RGB numpy arrays."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError

_ALLOWED_FORMATS = {"PNG", "JPEG"}


def validate_image(img: np.ndarray) -> np.ndarray:
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected HxWx3 array, got shape {getattr(img, 'shape', None)}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG or JPEG file to an RGB uint8 array."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in _ALLOWED_FORMATS:
                raise DecodeError(f"{path}: unsupported format {im.format!r}")
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise DecodeError(f"{path}: file not found") from None
    except UnidentifiedImageError:
        raise DecodeError(f"{path}: not a decodable image") from None


def save_png(img: np.ndarray, path: str | Path) -> None:
    validate_image(img)
    Image.fromarray(img, mode="RGB").save(Path(path), format="PNG")


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    validate_image(img)
    out = Image.fromarray(img, mode="RGB").resize((width, height), Image.BILINEAR)
    return np.asarray(out, dtype=np.uint8)
