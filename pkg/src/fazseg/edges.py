"""Canny edge detection with hysteresis thresholds tied to the image mean."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateImage, ImageTooSmall
from .image_core import as_gray, mean_intensity

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CannyParams:
    sigma: float = 1.4
    low_factor: float = 0.66
    high_factor: float = 1.33

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.low_factor < self.high_factor:
            raise ValueError("need 0 < low_factor < high_factor")


@dataclass
class CannyResult:
    edges: np.ndarray
    magnitude: np.ndarray
    low: float
    high: float


def adaptive_thresholds(img, params: CannyParams) -> tuple[float, float]:
    mean = mean_intensity(img)
    if mean == 0:
        raise DegenerateImage("image mean is zero; no usable signal")
    return params.low_factor * mean, params.high_factor * mean


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _correlate_rows(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    r = len(kernel) // 2
    padded = np.pad(arr, ((0, 0), (r, r)), mode="edge")
    out = np.zeros_like(arr)
    w = arr.shape[1]
    for i, k in enumerate(kernel):
        out += k * padded[:, i : i + w]
    return out


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with edge replication, float64 output."""
    k = gaussian_kernel(sigma)
    arr = np.asarray(img, dtype=np.float64)
    return _correlate_rows(_correlate_rows(arr, k).T, k).T


def sobel(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel derivatives (d/dcol, d/drow) with edge replication."""
    p = np.pad(arr, 1, mode="edge")
    h, w = arr.shape

    def s(dr, dc):
        return p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    gx = (s(-1, 1) + 2 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2 * s(0, -1) + s(1, -1))
    gy = (s(1, -1) + 2 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2 * s(-1, 0) + s(-1, 1))
    return gx, gy


def gradient(img, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gx, gy = sobel(gaussian_blur(img, sigma))
    return np.sqrt(gx * gx + gy * gy), gx, gy


# tan(22.5 deg) and tan(67.5 deg) split the plane into four direction sectors
_TAN_22 = math.tan(math.pi / 8)
_TAN_67 = math.tan(3 * math.pi / 8)


def non_maximum_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that peak along the quantized gradient direction.

    A pixel must be strictly above its neighbor on the negative side and not
    below the one on the positive side, so flat two-pixel ridges keep one pixel.
    """
    h, w = mag.shape
    p = np.pad(mag, 1, mode="constant", constant_values=0.0)

    def nb(dr, dc):
        return p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    ax, ay = np.abs(gx), np.abs(gy)
    horizontal = ay <= _TAN_22 * ax
    vertical = ay > _TAN_67 * ax
    same_sign = (gx * gy) > 0
    diag_main = ~horizontal & ~vertical & same_sign
    diag_anti = ~horizontal & ~vertical & ~same_sign

    keep = np.zeros_like(mag, dtype=bool)
    # gx is d/dcol, gy is d/drow: a horizontal gradient compares left/right
    for sector, (dr, dc) in (
        (horizontal, (0, 1)),
        (vertical, (1, 0)),
        (diag_main, (1, 1)),
        (diag_anti, (1, -1)),
    ):
        peak = (mag > nb(-dr, -dc)) & (mag >= nb(dr, dc))
        keep |= sector & peak
    return keep & (mag > 0)


def hysteresis(candidates: np.ndarray, mag: np.ndarray, low: float, high: float) -> np.ndarray:
    weak = candidates & (mag >= low)
    strong = weak & (mag >= high)
    labels, n = ndimage.label(weak, structure=EIGHT_CONNECTED)
    if n == 0:
        return weak
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return seeded[labels]


def canny_detailed(img, params: CannyParams) -> CannyResult:
    arr = as_gray(img)
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ImageTooSmall(f"canny needs at least 3x3 pixels, got {arr.shape[1]}x{arr.shape[0]}")
    low, high = adaptive_thresholds(arr, params)
    mag, gx, gy = gradient(arr, params.sigma)
    nms = non_maximum_suppression(mag, gx, gy)
    return CannyResult(hysteresis(nms, mag, low, high), mag, low, high)


def canny(img, params: CannyParams) -> np.ndarray:
    return canny_detailed(img, params).edges


def magnitude_to_u8(mag: np.ndarray) -> np.ndarray:
    """Scale a gradient magnitude buffer to 0..255 for debug dumps."""
    peak = float(mag.max())
    if peak <= 0:
        return np.zeros(mag.shape, dtype=np.uint8)
    return np.round(mag * (255.0 / peak)).astype(np.uint8)
