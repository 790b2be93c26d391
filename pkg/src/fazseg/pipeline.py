"""End-to-end FAZ extraction and the pixel-to-mm² area conversion."""

from __future__ import annotations

import dataclasses
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import candidates as cand_mod
from .candidates import Candidate, FilterRules
from .edges import CannyParams, canny_detailed, gaussian_blur
from .errors import AllCandidatesRejected, ConfigError, DegenerateImage, LocalizationFailed, NoCandidates
from .image_core import PhysicalExtent, as_gray
from .morphology import make_se, white_top_hat
from .region_grow import GrowParams, erode_seed, grow_region

log = logging.getLogger(__name__)

DEFAULT_CONFIG_NAME = "faz.conf"


@dataclass(frozen=True)
class PipelineConfig:
    se_shape: str = "disc"
    tophat_se_size: int = 9
    closing_se_size: int = 5
    opening_se_size: int = 7
    seed_erosion_se_size: int = 5
    canny: CannyParams = field(default_factory=CannyParams)
    rules: FilterRules = field(default_factory=FilterRules)
    grow: GrowParams = field(default_factory=GrowParams)
    # std of the Gaussian applied to the image that region growing reads; 0 = raw
    grow_smoothing_sigma: float = 1.0
    extent: PhysicalExtent = field(default_factory=lambda: PhysicalExtent(3.0))

    def __post_init__(self):
        for name in ("tophat_se_size", "closing_se_size", "opening_se_size", "seed_erosion_se_size"):
            make_se(self.se_shape, getattr(self, name))
        if self.grow_smoothing_sigma < 0:
            raise ValueError("grow_smoothing_sigma must be >= 0")

    def with_size_mm(self, size_mm: float) -> PipelineConfig:
        return dataclasses.replace(self, extent=PhysicalExtent(float(size_mm)))


# flat key -> (sub-structure or None, field name, parser)
_KEYS = {
    "se_shape": (None, "se_shape", str),
    "tophat_se_size": (None, "tophat_se_size", int),
    "closing_se_size": (None, "closing_se_size", int),
    "opening_se_size": (None, "opening_se_size", int),
    "seed_erosion_se_size": (None, "seed_erosion_se_size", int),
    "grow_smoothing_sigma": (None, "grow_smoothing_sigma", float),
    "size_mm": ("extent", "size_mm", float),
    "canny_sigma": ("canny", "sigma", float),
    "canny_low_factor": ("canny", "low_factor", float),
    "canny_high_factor": ("canny", "high_factor", float),
    "border_margin_frac": ("rules", "border_margin_frac", float),
    "min_solidity": ("rules", "min_solidity", float),
    "min_area_px": ("rules", "min_area_px", int),
    "grow_tolerance_frac": ("grow", "tolerance_frac", float),
    "grow_connectivity": ("grow", "connectivity", int),
    "grow_max_iterations": ("grow", "max_iterations", int),
    "grow_recompute_period": ("grow", "recompute_period", int),
    "grow_band_floor": ("grow", "band_floor", float),
    "grow_deletion": ("grow", "deletion", lambda v: _parse_bool(v)),
}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def config_to_dict(cfg: PipelineConfig) -> dict:
    out = {}
    for key, (sub, name, _) in _KEYS.items():
        holder = cfg if sub is None else getattr(cfg, sub)
        out[key] = getattr(holder, name)
    return out


def config_from_dict(values: dict) -> PipelineConfig:
    unknown = sorted(set(values) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    top, subs = {}, {"canny": {}, "rules": {}, "grow": {}, "extent": {}}
    for key, raw in values.items():
        sub, name, parse = _KEYS[key]
        try:
            value = parse(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        (top if sub is None else subs[sub])[name] = value
    base = PipelineConfig()
    try:
        return dataclasses.replace(
            base,
            canny=dataclasses.replace(base.canny, **subs["canny"]),
            rules=dataclasses.replace(base.rules, **subs["rules"]),
            grow=dataclasses.replace(base.grow, **subs["grow"]),
            extent=dataclasses.replace(base.extent, **subs["extent"]),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> PipelineConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return config_from_dict(values)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: PipelineConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_dict(cfg).items())


def resolve_config(path=None) -> PipelineConfig:
    """Explicit path first, then ``./faz.conf``, then built-in defaults."""
    if path is not None:
        return load_config(path)
    if os.path.isfile(DEFAULT_CONFIG_NAME):
        return load_config(DEFAULT_CONFIG_NAME)
    return PipelineConfig()


def area_mm2(area_px: int, width: int, height: int, extent: PhysicalExtent) -> float:
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    return area_px * extent.size_mm**2 / (width * height)


@dataclass
class StageDiagnostic:
    stage: str
    foreground_in: int | None
    foreground_out: int | None
    count: int | None = None
    seconds: float = 0.0


@dataclass
class FazResult:
    mask: np.ndarray
    centroid: tuple[float, float]
    area_px: int
    area_mm2: float
    preliminary: Candidate
    diagnostics: list[StageDiagnostic]
    stages: dict = field(default_factory=dict, repr=False)
    grow_stop_reason: str = "fixed_point"

    @property
    def preliminary_centroid(self) -> tuple[float, float]:
        return self.preliminary.centroid


class _Timer:
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics

    def record(self, stage, t0, fg_in, fg_out, count=None):
        self.diagnostics.append(StageDiagnostic(stage, fg_in, fg_out, count, time.perf_counter() - t0))


def extract_faz(img, cfg: PipelineConfig = PipelineConfig(), keep_stages: bool = False) -> FazResult:
    """Locate and segment the FAZ.

    Raises LocalizationFailed when the input is degenerate or no candidate
    survives filtering.
    """
    img = as_gray(img)
    h, w = img.shape
    diags: list[StageDiagnostic] = []
    timer = _Timer(diags)
    stages = {}

    t0 = time.perf_counter()
    tophat = white_top_hat(img, make_se(cfg.se_shape, cfg.tophat_se_size))
    timer.record("top_hat", t0, None, None)

    t0 = time.perf_counter()
    try:
        canny = canny_detailed(tophat, cfg.canny)
    except DegenerateImage as exc:
        raise LocalizationFailed("degenerate image", exc) from exc
    timer.record("canny", t0, None, int(canny.edges.sum()))

    t0 = time.perf_counter()
    closing_se = make_se(cfg.se_shape, cfg.closing_se_size)
    opening_se = make_se(cfg.se_shape, cfg.opening_se_size)
    cand_mask = cand_mod.candidate_mask(canny.edges, closing_se, opening_se)
    try:
        cands = cand_mod.extract_candidates(canny.edges, closing_se, opening_se)
    except NoCandidates as exc:
        raise LocalizationFailed("no candidates", exc) from exc
    timer.record("candidates", t0, int(canny.edges.sum()), int(cand_mask.sum()), len(cands))

    t0 = time.perf_counter()
    try:
        kept = cand_mod.filter_false_positives(cands, cfg.rules, w, h)
    except AllCandidatesRejected as exc:
        raise LocalizationFailed("all candidates rejected", exc) from exc
    timer.record(
        "filter", t0, sum(c.area_px for c in cands), sum(c.area_px for c in kept), len(kept)
    )

    t0 = time.perf_counter()
    chosen = cand_mod.select_faz(kept, w, h)
    timer.record("select", t0, sum(c.area_px for c in kept), chosen.area_px, 1)

    t0 = time.perf_counter()
    seed = erode_seed(chosen, make_se(cfg.se_shape, cfg.seed_erosion_se_size), img.shape)
    timer.record("erode_seed", t0, chosen.area_px, int(seed.sum()))

    t0 = time.perf_counter()
    grow_input = img
    if cfg.grow_smoothing_sigma > 0:
        grow_input = np.clip(np.floor(gaussian_blur(img, cfg.grow_smoothing_sigma) + 0.5), 0, 255).astype(np.uint8)
    grown = grow_region(grow_input, seed, cfg.grow)
    mask = grown.mask
    timer.record("region_grow", t0, int(seed.sum()), int(mask.sum()), grown.iterations)

    rows, cols = np.nonzero(mask)
    area_px = len(rows)
    if keep_stages:
        stages = {
            "tophat": tophat,
            "gradient": canny.magnitude,
            "edges": canny.edges,
            "candidates": cand_mask,
            "filtered": np.logical_or.reduce([c.to_mask(img.shape) for c in kept]),
            "preliminary": chosen.to_mask(img.shape),
            "seed": seed,
            "final": mask,
        }
    return FazResult(
        mask=mask,
        centroid=(float(rows.mean()), float(cols.mean())),
        area_px=area_px,
        area_mm2=area_mm2(area_px, w, h, cfg.extent),
        preliminary=chosen,
        diagnostics=diags,
        stages=stages,
        grow_stop_reason=grown.stop_reason,
    )
