"""Deterministic OCT-A-like test images with exact FAZ ground truth.

Random numbers come from SplitMix64 evaluated on a counter::

    z  = seed + (i + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

for draw index ``i``, so a seed fully determines every image on any platform
with IEEE doubles. Uniforms take the top 53 bits; normals use Box-Muller.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from .image_core import save_gray, save_mask

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1

MANIFEST_HEADER = ["image", "gt1", "gt2", "size_mm", "depth", "cohort", "artifact"]
SIDES = ("top", "bottom", "left", "right")


def splitmix64(seed: int, index: np.ndarray) -> np.ndarray:
    z = np.uint64(seed & MASK64) + (index.astype(np.uint64) + np.uint64(1)) * GOLDEN
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


class Rng:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return splitmix64(self.seed, idx)

    def uniform(self, n: int | None = None, low: float = 0.0, high: float = 1.0):
        u = (self.raw(1 if n is None else n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        u = low + (high - low) * u
        return float(u[0]) if n is None else u

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return low + int(self.raw(1)[0] % np.uint64(high - low + 1))

    def normal(self, n: int) -> np.ndarray:
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1], keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n]

    def spawn(self, key: int) -> Rng:
        return Rng(int(splitmix64(self.seed, np.array([key], dtype=np.uint64))[0]))


@dataclass(frozen=True)
class Artifact:
    """Dark strip along one image side, simulating a capture failure."""

    side: str = "left"
    width_px: int = 20
    level: int = 30


@dataclass(frozen=True)
class SynthSpec:
    width: int = 320
    height: int = 320
    faz_center: tuple[int, int] | None = None  # (row, col); None = frame center
    faz_radii: tuple[int, int] = (30, 30)  # (row radius, col radius)
    faz_roughness: float = 0.0
    faz_level: int = 40
    background_level: int = 100
    # closed vessel loop hugging the FAZ, separated from it by ring_gap px
    ring_gap: int = 2
    ring_width: int = 3
    radial_vessels: int = 10
    vessel_count: int = 70
    vessel_length: tuple[int, int] = (60, 200)
    vessel_width: tuple[int, int] = (1, 3)
    vessel_brightness: tuple[int, int] = (170, 250)
    vessel_curvature: float = 0.12  # heading change std per step, radians
    # dense short thin segments filling the space between the larger vessels
    capillary_count: int = 2400
    capillary_length: tuple[int, int] = (10, 40)
    capillary_brightness: tuple[int, int] = (140, 200)
    noise_sigma: float = 8.0
    artifacts: tuple[Artifact, ...] = field(default_factory=tuple)
    # second-expert mask: radii scaled by up to this relative amount
    expert2_jitter: float = 0.05
    rng_seed: int = 0

    @property
    def center(self) -> tuple[int, int]:
        if self.faz_center is not None:
            return self.faz_center
        return self.height // 2, self.width // 2

    def validate(self) -> None:
        if self.width < 16 or self.height < 16:
            raise InvalidSpec("frame must be at least 16x16")
        cr, cc = self.center
        ry, rx = self.faz_radii
        if ry < 1 or rx < 1:
            raise InvalidSpec("FAZ radii must be >= 1")
        if not 0 <= self.faz_roughness < 0.5:
            raise InvalidSpec("faz_roughness must lie in [0, 0.5)")
        grow = 1 + self.faz_roughness
        if not (
            cr - ry * grow >= 0.2 * self.height
            and cr + ry * grow <= 0.8 * self.height
            and cc - rx * grow >= 0.2 * self.width
            and cc + rx * grow <= 0.8 * self.width
        ):
            raise InvalidSpec("FAZ must lie inside the central 60% of the frame")
        lo = min(self.vessel_brightness[0], self.capillary_brightness[0])
        for a, b in (self.vessel_brightness, self.capillary_brightness):
            if not 0 <= a <= b <= 255:
                raise InvalidSpec("vessel brightness ranges must lie in [0, 255]")
        if lo <= self.faz_level + 3 * self.noise_sigma:
            raise InvalidSpec("vessels must be brighter than the FAZ by more than 3 noise sigmas")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")
        if self.ring_gap < 1 or self.ring_width < 2:
            raise InvalidSpec("ring_gap must be >= 1 and ring_width >= 2")
        for a in self.artifacts:
            if a.side not in SIDES:
                raise InvalidSpec(f"unknown artifact side {a.side!r}")
            if a.width_px < 1:
                raise InvalidSpec("artifact width must be >= 1")


def _shape_radius(spec: SynthSpec, theta: np.ndarray, rng_phases) -> np.ndarray:
    """Relative boundary radius (1 = the plain ellipse) at polar angle theta."""
    if spec.faz_roughness == 0:
        return np.ones_like(theta)
    wobble = np.zeros_like(theta)
    for k, (amp, phase) in enumerate(rng_phases, start=2):
        wobble += amp * np.sin(k * theta + phase)
    return 1.0 + spec.faz_roughness * wobble


def faz_mask(spec: SynthSpec, radii=None, phases=()) -> np.ndarray:
    ry, rx = spec.faz_radii if radii is None else radii
    cr, cc = spec.center
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    dy, dx = yy - cr, xx - cc
    if spec.faz_roughness == 0 and radii is None:
        # exact integer point-in-ellipse test
        return dy * dy * (rx * rx) + dx * dx * (ry * ry) <= (rx * rx) * (ry * ry)
    ny, nx = dy / ry, dx / rx
    rho = np.sqrt(ny * ny + nx * nx)
    return rho <= _shape_radius(spec, np.arctan2(ny, nx), phases)


def _stamp_offsets(width: int) -> np.ndarray:
    r = width // 2 + 1
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = 4 * (yy * yy + xx * xx) <= width * width
    keep[r, r] = True
    return np.stack([yy[keep], xx[keep]], axis=1)


def _stamp(layer: np.ndarray, points: np.ndarray, width: int, value: int) -> None:
    if len(points) == 0:
        return
    offs = _stamp_offsets(width)
    pts = (points[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    h, w = layer.shape
    ok = (pts[:, 0] >= 0) & (pts[:, 0] < h) & (pts[:, 1] >= 0) & (pts[:, 1] < w)
    pts = pts[ok]
    np.maximum.at(layer, (pts[:, 0], pts[:, 1]), value)


def _walks(rng: Rng, starts: np.ndarray, headings: np.ndarray, lengths: np.ndarray, curvature: float, shape):
    """Batch of curvature-limited random walks, one pixel per step.

    Returns (points, walk index per point). Each walk ends the first time it
    leaves the frame.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    total = int(lengths.sum())
    walk_id = np.repeat(np.arange(len(lengths)), lengths)
    first = np.concatenate([[0], np.cumsum(lengths)[:-1]])

    def segmented_cumsum(values):
        c = np.cumsum(values)
        offset = np.concatenate([[0.0], c])[first]
        return c - offset[walk_id]

    turns = rng.normal(total) * curvature
    heading = headings[walk_id] + segmented_cumsum(turns)
    ys = starts[walk_id, 0] + segmented_cumsum(np.sin(heading))
    xs = starts[walk_id, 1] + segmented_cumsum(np.cos(heading))
    pts = np.stack([np.floor(ys + 0.5), np.floor(xs + 0.5)], axis=1).astype(np.int64)
    h, w = shape
    outside = ~((pts[:, 0] >= 0) & (pts[:, 0] < h) & (pts[:, 1] >= 0) & (pts[:, 1] < w))
    left = segmented_cumsum(outside.astype(np.float64)) > 0
    return pts[~left], walk_id[~left]


def _stamp_walks(layer, pts, walk_id, widths, values) -> None:
    for width in np.unique(widths):
        sel = widths[walk_id] == width
        offs = _stamp_offsets(int(width))
        stamped = (pts[sel][:, None, :] + offs[None, :, :]).reshape(-1, 2)
        vals = np.repeat(values[walk_id[sel]], len(offs))
        h, w = layer.shape
        ok = (stamped[:, 0] >= 0) & (stamped[:, 0] < h) & (stamped[:, 1] >= 0) & (stamped[:, 1] < w)
        np.maximum.at(layer, (stamped[ok, 0], stamped[ok, 1]), vals[ok])


def _randint(rng: Rng, n: int, low: int, high: int) -> np.ndarray:
    return low + (rng.raw(n) % np.uint64(high - low + 1)).astype(np.int64)


def generate_detailed(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Render (image, expert-1 mask, expert-2 mask)."""
    spec.validate()
    rng = Rng(spec.rng_seed)
    h, w = spec.height, spec.width
    cr, cc = spec.center
    ry, rx = spec.faz_radii

    phases = [(rng.uniform(low=-1, high=1), rng.uniform(high=2 * math.pi)) for _ in range(3)]
    if spec.faz_roughness:
        norm = sum(abs(a) for a, _ in phases) or 1.0
        phases = [(a / norm, p) for a, p in phases]
    gt = faz_mask(spec, phases=phases) if spec.faz_roughness else faz_mask(spec)
    scale = 1 + rng.uniform(2, -spec.expert2_jitter, spec.expert2_jitter)
    gt2 = faz_mask(spec, radii=(ry * scale[0], rx * scale[1]), phases=phases)

    vessels = np.zeros((h, w), dtype=np.int32)
    vlo, vhi = spec.vessel_brightness
    wlo, whi = spec.vessel_width

    # perifoveal loop: sampled densely so the stamped ring is closed
    theta = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    rel = _shape_radius(spec, theta, phases)
    offset = spec.ring_gap + spec.ring_width / 2 + 0.5
    ring_y = cr + (ry * rel + offset) * np.sin(theta)
    ring_x = cc + (rx * rel + offset) * np.cos(theta)
    ring_pts = np.stack([np.floor(ring_y + 0.5), np.floor(ring_x + 0.5)], axis=1).astype(np.int64)

    keepout = faz_mask(spec, radii=(ry + offset, rx + offset), phases=phases)

    n = spec.radial_vessels
    if n:
        k = _randint(rng, n, 0, len(ring_pts) - 1)
        headings = theta[k] + rng.uniform(n, -0.3, 0.3)
        lengths = np.full(n, int(math.hypot(h, w)))
        pts, wid = _walks(rng, ring_pts[k].astype(np.float64), headings, lengths, spec.vessel_curvature / 2, (h, w))
        _stamp_walks(vessels, pts, wid, _randint(rng, n, wlo, whi), _randint(rng, n, vlo, vhi))

    families = (
        (spec.vessel_count, spec.vessel_length, spec.vessel_curvature, (wlo, whi), spec.vessel_brightness),
        (spec.capillary_count, spec.capillary_length, 2 * spec.vessel_curvature, (1, 1), spec.capillary_brightness),
    )
    for n, (llo, lhi), curvature, (a, b), (blo, bhi) in families:
        if n == 0:
            continue
        starts = np.stack([rng.uniform(n, 0, h - 1), rng.uniform(n, 0, w - 1)], axis=1)
        headings = rng.uniform(n, 0, 2 * math.pi)
        pts, wid = _walks(rng, starts, headings, _randint(rng, n, llo, lhi), curvature, (h, w))
        _stamp_walks(vessels, pts, wid, _randint(rng, n, a, b), _randint(rng, n, blo, bhi))

    vessels[keepout] = 0
    _stamp(vessels, ring_pts, spec.ring_width, rng.integer(vlo, vhi))

    img = np.full((h, w), float(spec.background_level))
    img = np.where(vessels > 0, vessels, img)
    img[gt] = spec.faz_level
    for a in spec.artifacts:
        strip = {
            "top": (slice(0, a.width_px), slice(None)),
            "bottom": (slice(h - a.width_px, h), slice(None)),
            "left": (slice(None), slice(0, a.width_px)),
            "right": (slice(None), slice(w - a.width_px, w)),
        }[a.side]
        img[strip] = a.level
    if spec.noise_sigma > 0:
        img = img + spec.noise_sigma * rng.normal(h * w).reshape(h, w)
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return img, gt, gt2


def generate(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    img, gt, _ = generate_detailed(spec)
    return img, gt


def suite_specs(n: int, base: SynthSpec, seed: int, artifacts: bool = False) -> list[SynthSpec]:
    """Jittered variants of ``base``; with ``artifacts`` every odd entry gets a dark strip."""
    if n < 1:
        raise ValueError("n must be >= 1")
    root = Rng(seed)
    specs = []
    for i in range(n):
        rng = root.spawn(i)
        ry = rng.integer(22, 38)
        rx = min(max(int(round(ry * rng.uniform(low=0.8, high=1.25))), 20), 40)
        cr = base.height // 2 + rng.integer(-15, 15)
        cc = base.width // 2 + rng.integer(-15, 15)
        density = rng.uniform(low=0.8, high=1.2)
        count = int(round(base.vessel_count * density))
        capillaries = int(round(base.capillary_count * density))
        arts = ()
        if artifacts and i % 2 == 1:
            side = SIDES[rng.integer(0, 3)]
            arts = (Artifact(side, rng.integer(12, 28), base.faz_level - 10),)
        specs.append(
            replace(
                base,
                faz_center=(cr, cc),
                faz_radii=(ry, rx),
                faz_roughness=rng.uniform(high=0.08),
                vessel_count=count,
                capillary_count=capillaries,
                artifacts=arts,
                rng_seed=int(rng.raw(1)[0]),
            )
        )
    return specs


def _subgroup(i: int) -> tuple[int, str, str]:
    return (3, 6)[(i // 2) % 2], ("superficial", "deep")[(i // 4) % 2], ("healthy", "diabetic")[(i // 8) % 2]


def generate_suite(n: int, base: SynthSpec, seed: int, out_dir, artifacts: bool = False):
    """Write images, expert masks and ``manifest.csv`` into ``out_dir``.

    Returns ``(image, gt1, manifest_row)`` per entry.
    """
    os.makedirs(out_dir, exist_ok=True)
    rows, out = [], []
    for i, spec in enumerate(suite_specs(n, base, seed, artifacts)):
        img, gt1, gt2 = generate_detailed(spec)
        names = [f"image_{i:03d}.png", f"gt1_{i:03d}.png", f"gt2_{i:03d}.png"]
        save_gray(img, os.path.join(out_dir, names[0]))
        save_mask(gt1, os.path.join(out_dir, names[1]))
        save_mask(gt2, os.path.join(out_dir, names[2]))
        size_mm, depth, cohort = _subgroup(i)
        artifact = spec.artifacts[0].side if spec.artifacts else ""
        row = dict(zip(MANIFEST_HEADER, names + [size_mm, depth, cohort, artifact]))
        rows.append(row)
        out.append((img, gt1, row))
    with open(os.path.join(out_dir, "manifest.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return out
