"""Region growing with pixel deletion, used to refine the preliminary FAZ.

Each sweep computes the average region value (ARV), accepts frontier pixels
whose intensity falls in ``[ARV - t*ARV, ARV + t*ARV]`` and drops region
pixels that fall outside it. The pixel of the seed nearest its centroid is the
anchor: it is never deleted, and after every sweep the region is cut back to
the component that contains it, so deletions can never split the region.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .candidates import Candidate
from .errors import EmptySeed
from .image_core import as_gray, as_mask, check_same_shape
from .morphology import StructuringElement, cross, dilate, erode, square

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrowParams:
    tolerance_frac: float = 0.30
    connectivity: int = 8
    max_iterations: int = 1000
    # 0 refreshes the ARV once per sweep; n > 0 refreshes it after every n
    # accepted pixels while visiting the frontier in row-major order
    recompute_period: int = 0
    # minimum half-width of the accept band, in gray levels
    band_floor: float = 5.0
    deletion: bool = True

    def __post_init__(self):
        if not 0 < self.tolerance_frac < 1:
            raise ValueError("tolerance_frac must lie in (0, 1)")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.recompute_period < 0:
            raise ValueError("recompute_period must be >= 0")
        if self.band_floor < 0:
            raise ValueError("band_floor must be >= 0")

    def band(self, arv: float) -> tuple[float, float]:
        half = max(self.tolerance_frac * arv, self.band_floor)
        return arv - half, arv + half


@dataclass
class GrowResult:
    mask: np.ndarray
    anchor: tuple[int, int]
    iterations: int
    stop_reason: str  # "fixed_point", "cycle" or "max_iterations"
    arv: float
    band: tuple[float, float]
    # output pixels outside the final band; at a fixed point only the anchor can be here
    exceptions: np.ndarray

    @property
    def converged(self) -> bool:
        return self.stop_reason == "fixed_point"

    @property
    def exception_count(self) -> int:
        return int(self.exceptions.sum())


def _neighborhood(connectivity: int) -> StructuringElement:
    return square(3) if connectivity == 8 else cross()


def nearest_pixel(mask: np.ndarray, point) -> tuple[int, int]:
    """Foreground pixel closest to ``point``; ties resolve in row-major order."""
    coords = np.argwhere(mask)
    d = (coords[:, 0] - point[0]) ** 2 + (coords[:, 1] - point[1]) ** 2
    r, c = coords[int(np.argmin(d))]
    return int(r), int(c)


def component_containing(mask: np.ndarray, pixel, connectivity: int) -> np.ndarray:
    labels, _ = ndimage.label(mask, structure=_neighborhood(connectivity).hits)
    lab = labels[pixel]
    if lab == 0:
        return np.zeros_like(mask)
    return labels == lab


def _in_band(values: np.ndarray, band) -> np.ndarray:
    return (values >= band[0]) & (values <= band[1])


def _sweep_sequential(img, region, frontier, params: GrowParams):
    """Visit the frontier in row-major order, refreshing the ARV as pixels join."""
    grown = region.copy()
    total = float(img[region].sum(dtype=np.int64))
    count = int(region.sum())
    arv = total / count
    accepted = 0
    for r, c in np.argwhere(frontier):
        v = float(img[r, c])
        lo, hi = params.band(arv)
        if lo <= v <= hi:
            grown[r, c] = True
            total += v
            count += 1
            accepted += 1
            if accepted % params.recompute_period == 0:
                arv = total / count
    return grown, total / count


def grow_region(img, seed, params: GrowParams = GrowParams()) -> GrowResult:
    img = as_gray(img)
    seed = as_mask(seed)
    check_same_shape(img, seed)
    if not seed.any():
        raise EmptySeed("region growing needs a non-empty seed")

    rows, cols = np.nonzero(seed)
    anchor = nearest_pixel(seed, (rows.mean(), cols.mean()))
    nbh = _neighborhood(params.connectivity)
    values = img.astype(np.float64)

    region = component_containing(seed, anchor, params.connectivity)
    seen = set()
    stop = "max_iterations"
    iterations = 0
    for iterations in range(1, params.max_iterations + 1):
        frontier = dilate(region, nbh) & ~region
        if params.recompute_period:
            grown, arv = _sweep_sequential(img, region, frontier, params)
        else:
            arv = float(values[region].mean())
            grown = region | (frontier & _in_band(values, params.band(arv)))
        if params.deletion:
            grown &= _in_band(values, params.band(arv))
            grown[anchor] = True
        new = component_containing(grown, anchor, params.connectivity)
        if np.array_equal(new, region):
            stop = "fixed_point"
            break
        digest = hashlib.blake2b(np.packbits(new).tobytes(), digest_size=16).digest()
        if digest in seen:
            region = new
            stop = "cycle"
            break
        seen.add(digest)
        region = new
    if stop == "max_iterations":
        log.warning("region growing stopped after %d iterations without converging", iterations)

    arv = float(values[region].mean())
    band = params.band(arv)
    exceptions = region & ~_in_band(values, band)
    return GrowResult(region, anchor, iterations, stop, arv, band, exceptions)


def grow(img, seed, params: GrowParams = GrowParams()) -> np.ndarray:
    return grow_region(img, seed, params).mask


def erode_seed(cand: Candidate, se: StructuringElement, shape) -> np.ndarray:
    """Erode the rasterized candidate; fall back to its pixel nearest the centroid."""
    mask = cand.to_mask(shape)
    eroded = erode(mask, se)
    if eroded.any():
        return eroded
    fallback = np.zeros(shape, dtype=bool)
    fallback[nearest_pixel(mask, cand.centroid)] = True
    return fallback
