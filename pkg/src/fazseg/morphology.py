"""Flat morphology on gray images and binary masks.

Erosion takes the minimum over ``p + b`` for every hit offset ``b`` of the
structuring element; dilation takes the maximum over ``p - b`` (the reflected
element), so opening and closing are idempotent even for asymmetric elements.
Pixels outside the frame take the neutral value of the reduction: 255/True
for erosion, 0/False for dilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_core import as_gray


@dataclass(frozen=True, eq=False)
class StructuringElement:
    hits: np.ndarray

    def __post_init__(self):
        hits = np.asarray(self.hits, dtype=bool)
        if hits.ndim != 2:
            raise ValueError("structuring element must be 2-D")
        h, w = hits.shape
        if h % 2 == 0 or w % 2 == 0:
            raise ValueError(f"structuring element dims must be odd, got {w}x{h}")
        if not hits[h // 2, w // 2]:
            raise ValueError("the anchor (center) cell must be a hit")
        hits = hits.copy()
        hits.flags.writeable = False
        object.__setattr__(self, "hits", hits)

    @property
    def width(self) -> int:
        return self.hits.shape[1]

    @property
    def height(self) -> int:
        return self.hits.shape[0]

    @property
    def anchor(self) -> tuple[int, int]:
        return self.height // 2, self.width // 2

    def offsets(self) -> list[tuple[int, int]]:
        """(drow, dcol) of every hit relative to the anchor, row-major."""
        ar, ac = self.anchor
        return [(int(r) - ar, int(c) - ac) for r, c in zip(*np.nonzero(self.hits))]

    def reflected(self) -> StructuringElement:
        return StructuringElement(self.hits[::-1, ::-1])

    def __eq__(self, other):
        return isinstance(other, StructuringElement) and np.array_equal(self.hits, other.hits)

    def __hash__(self):
        return hash((self.hits.shape, self.hits.tobytes()))

    def __repr__(self):
        return f"StructuringElement({self.width}x{self.height}, {int(self.hits.sum())} hits)"


def disc(size: int) -> StructuringElement:
    """Euclidean ball of radius size/2 sampled at cell centers."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"disc size must be odd and positive, got {size}")
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return StructuringElement(4 * (yy * yy + xx * xx) <= size * size)


def square(size: int) -> StructuringElement:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"square size must be odd and positive, got {size}")
    return StructuringElement(np.ones((size, size), dtype=bool))


def cross() -> StructuringElement:
    return StructuringElement(np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool))


def make_se(shape: str, size: int) -> StructuringElement:
    if shape == "disc":
        return disc(size)
    if shape == "square":
        return square(size)
    raise ValueError(f"unknown structuring element shape {shape!r}")


def _prepare(img):
    arr = np.asarray(img)
    if arr.dtype == bool:
        return arr, True
    return as_gray(arr), False


def _reduce(arr: np.ndarray, offsets, fill, op) -> np.ndarray:
    h, w = arr.shape
    pad = max(max(abs(dr), abs(dc)) for dr, dc in offsets)
    padded = np.pad(arr, pad, mode="constant", constant_values=fill)
    out = None
    for dr, dc in offsets:
        view = padded[pad + dr : pad + dr + h, pad + dc : pad + dc + w]
        out = view.copy() if out is None else op(out, view, out=out)
    return out


def erode(img, se: StructuringElement) -> np.ndarray:
    arr, binary = _prepare(img)
    if binary:
        return _reduce(arr, se.offsets(), True, np.logical_and)
    return _reduce(arr, se.offsets(), 255, np.minimum)


def dilate(img, se: StructuringElement) -> np.ndarray:
    arr, binary = _prepare(img)
    offsets = [(-dr, -dc) for dr, dc in se.offsets()]
    if binary:
        return _reduce(arr, offsets, False, np.logical_or)
    return _reduce(arr, offsets, 0, np.maximum)


def opening(img, se: StructuringElement) -> np.ndarray:
    return dilate(erode(img, se), se)


def closing(img, se: StructuringElement) -> np.ndarray:
    return erode(dilate(img, se), se)


def white_top_hat(img, se: StructuringElement) -> np.ndarray:
    """Bright detail narrower than ``se``: ``img - opening(img)``, never negative."""
    arr = as_gray(img)
    opened = opening(arr, se)
    return np.where(arr > opened, arr - opened, 0).astype(np.uint8)
