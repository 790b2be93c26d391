"""FAZ candidate regions: extraction from the edge map, filtering and selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AllCandidatesRejected, NoCandidates
from .image_core import as_mask
from .morphology import StructuringElement, closing, opening

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
REFERENCE_PIXELS = 320 * 320


@dataclass(frozen=True, eq=False)
class Candidate:
    """One 8-connected foreground component with cached geometry.

    ``pixels`` is an (N, 2) array of (row, col) in row-major order.
    """

    pixels: np.ndarray
    perimeter_px: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]

    @property
    def area_px(self) -> int:
        return len(self.pixels)

    @property
    def bbox_area(self) -> int:
        r0, c0, r1, c1 = self.bbox
        return (r1 - r0 + 1) * (c1 - c0 + 1)

    @property
    def solidity(self) -> float:
        return self.area_px / self.bbox_area

    def to_mask(self, shape) -> np.ndarray:
        mask = np.zeros(shape, dtype=bool)
        mask[self.pixels[:, 0], self.pixels[:, 1]] = True
        return mask

    def __repr__(self):
        r, c = self.centroid
        return (
            f"Candidate(area={self.area_px}, perimeter={self.perimeter_px}, "
            f"centroid=({r:.1f}, {c:.1f}), bbox={self.bbox})"
        )


@dataclass(frozen=True)
class FilterRules:
    border_margin_frac: float = 0.10
    min_solidity: float = 0.35
    min_area_px: int = 30

    def __post_init__(self):
        if not 0 < self.border_margin_frac < 0.5:
            raise ValueError("border_margin_frac must lie in (0, 0.5)")
        if not 0 < self.min_solidity <= 1:
            raise ValueError("min_solidity must lie in (0, 1]")
        if self.min_area_px < 0:
            raise ValueError("min_area_px must be non-negative")

    def scaled_min_area(self, width: int, height: int) -> float:
        return self.min_area_px * (width * height) / REFERENCE_PIXELS


def boundary_pixels(mask) -> np.ndarray:
    """Foreground pixels with a 4-neighbor outside the mask or the frame."""
    m = as_mask(mask)
    p = np.pad(m, 1, mode="constant", constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return m & ~interior


def perimeter(c: Candidate) -> int:
    return c.perimeter_px


def _candidate_from_coords(rows: np.ndarray, cols: np.ndarray) -> Candidate:
    r0, r1 = int(rows.min()), int(rows.max())
    c0, c1 = int(cols.min()), int(cols.max())
    local = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
    local[rows - r0, cols - c0] = True
    pixels = np.stack([rows, cols], axis=1).astype(np.int64)
    return Candidate(
        pixels=pixels,
        perimeter_px=int(boundary_pixels(local).sum()),
        centroid=(float(rows.mean()), float(cols.mean())),
        bbox=(r0, c0, r1, c1),
    )


def connected_components(mask) -> list[Candidate]:
    """Maximal 8-connected components, ordered by the top-left of their bbox."""
    m = as_mask(mask)
    labels, n = ndimage.label(m, structure=EIGHT_CONNECTED)
    if n == 0:
        return []
    rows, cols = np.nonzero(labels)  # row-major
    lab = labels[rows, cols]
    order = np.argsort(lab, kind="stable")
    rows, cols, lab = rows[order], cols[order], lab[order]
    starts = np.searchsorted(lab, np.arange(1, n + 1))
    ends = np.append(starts[1:], len(lab))
    cands = [_candidate_from_coords(rows[s:e], cols[s:e]) for s, e in zip(starts, ends)]
    cands.sort(key=lambda c: (c.bbox[0], c.bbox[1]))
    return cands


def candidate_mask(edges, closing_se: StructuringElement, opening_se: StructuringElement) -> np.ndarray:
    """Non-vascular space: close the edges, invert, then open."""
    closed = closing(as_mask(edges), closing_se)
    return opening(~closed, opening_se)


def extract_candidates(edges, closing_se: StructuringElement, opening_se: StructuringElement) -> list[Candidate]:
    cands = connected_components(candidate_mask(edges, closing_se, opening_se))
    if not cands:
        raise NoCandidates("no avascular region survived the candidate stage")
    return cands


def rejection_reason(c: Candidate, rules: FilterRules, width: int, height: int) -> str | None:
    r, col = c.centroid
    margin_r = rules.border_margin_frac * height
    margin_c = rules.border_margin_frac * width
    if min(r, height - 1 - r) < margin_r or min(col, width - 1 - col) < margin_c:
        return "peripheral"
    r0, c0, r1, c1 = c.bbox
    touched = (r0 == 0) + (c0 == 0) + (r1 == height - 1) + (c1 == width - 1)
    if touched >= 3:
        return "peripheral"
    if c.area_px < rules.scaled_min_area(width, height):
        return "small"
    if c.solidity < rules.min_solidity:
        return "disperse"
    return None


def filter_false_positives(cands, rules: FilterRules, width: int, height: int) -> list[Candidate]:
    kept = [c for c in cands if rejection_reason(c, rules, width, height) is None]
    if not kept:
        raise AllCandidatesRejected(f"all {len(cands)} candidates were rejected")
    return kept


def select_faz(cands, width: int | None = None, height: int | None = None) -> Candidate:
    """Largest perimeter; ties go to larger area, then to the most central."""
    if not cands:
        raise ValueError("select_faz needs at least one candidate")
    center = None if width is None or height is None else ((height - 1) / 2, (width - 1) / 2)

    def key(c):
        dist = 0.0
        if center is not None:
            dist = (c.centroid[0] - center[0]) ** 2 + (c.centroid[1] - center[1]) ** 2
        return (-c.perimeter_px, -c.area_px, dist)

    return min(cands, key=key)
