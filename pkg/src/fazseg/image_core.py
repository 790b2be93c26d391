"""Raster containers, PNG/PGM I/O and global intensity statistics.

Gray images are 2-D ``uint8`` arrays indexed ``[row, col]``; binary masks are
2-D ``bool`` arrays of the same layout. Width is ``shape[1]``, height is
``shape[0]``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImage, DimensionMismatch, ImageNotFound, UnsupportedFormat

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
PGM_MAGIC = b"P5"


@dataclass(frozen=True)
class PhysicalExtent:
    """Millimeters covered by one side of a (square) capture."""

    size_mm: float

    def __post_init__(self):
        if not self.size_mm > 0:
            raise ValueError(f"size_mm must be positive, got {self.size_mm!r}")


def as_gray(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.dtype == bool or (arr.min() < 0 or arr.max() > 255):
            raise ValueError("gray images hold 8-bit intensities in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} does not match {b.shape}")


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma with round-half-up, computed in exact integer arithmetic."""
    rgb = rgb.astype(np.int64)
    weighted = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return ((weighted + 500) // 1000).astype(np.uint8)


def load_grayscale(path) -> np.ndarray:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ImageNotFound(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
    if not (head.startswith(PNG_MAGIC) or head.startswith(PGM_MAGIC)):
        raise UnsupportedFormat(f"{path}: only PNG and binary PGM (P5) are accepted")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "1", "LA"):
                return np.array(im.convert("L"), dtype=np.uint8)
            if mode in ("RGB", "RGBA", "P", "PA"):
                return rgb_to_luma(np.array(im.convert("RGB")))
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    raise UnsupportedFormat(f"{path}: unsupported pixel mode {mode!r}")


def save_gray(img, path) -> None:
    try:
        Image.fromarray(as_gray(img)).save(os.fspath(path), format="PNG")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def save_mask(mask, path) -> None:
    """Write a mask as 8-bit PNG, foreground 255 and background 0."""
    save_gray(as_mask(mask).astype(np.uint8) * 255, path)


def load_mask(path) -> np.ndarray:
    """Any nonzero pixel is foreground."""
    return load_grayscale(path) > 0


def invert(img) -> np.ndarray:
    return 255 - as_gray(img)


def mean_intensity(img) -> float:
    arr = as_gray(img)
    return float(arr.sum(dtype=np.int64)) / arr.size
