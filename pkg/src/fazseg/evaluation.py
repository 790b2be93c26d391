"""Localization hits, area correlation and Jaccard agreement over a dataset."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConstantSeries, DimensionMismatch, FazError, LengthMismatch, LocalizationFailed, ManifestError
from .image_core import PhysicalExtent, as_mask, check_same_shape, load_grayscale, load_mask
from .pipeline import FazResult, PipelineConfig, area_mm2, config_to_dict, extract_faz

DEPTHS = ("superficial", "deep")
COHORTS = ("healthy", "diabetic")
REQUIRED_COLUMNS = ("image", "gt1", "gt2", "size_mm", "depth", "cohort")
OPTIONAL_COLUMNS = ("artifact",)
PAIRINGS = (
    ("system_vs_expert1", "area_mm2", "gt1_area_mm2", "jaccard_system_gt1"),
    ("system_vs_expert2", "area_mm2", "gt2_area_mm2", "jaccard_system_gt2"),
    ("expert1_vs_expert2", "gt1_area_mm2", "gt2_area_mm2", "jaccard_gt1_gt2"),
)
ROW_FIELDS = (
    "image", "size_mm", "depth", "cohort", "artifact", "status", "reason", "hit",
    "area_px", "area_mm2", "centroid_row", "centroid_col",
    "preliminary_row", "preliminary_col", "gt1_area_mm2", "gt2_area_mm2",
    "jaccard_system_gt1", "jaccard_system_gt2", "jaccard_gt1_gt2",
)  # fmt: skip


def jaccard(a, b) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    a, b = as_mask(a), as_mask(b)
    check_same_shape(a, b)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def pearson(xs, ys) -> float:
    """Sample covariance over the product of sample standard deviations."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"series lengths differ: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise LengthMismatch("pearson needs at least two samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ConstantSeries("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def round_half_down(x: float) -> int:
    return int(math.ceil(x - 0.5))


def centroid_pixel(centroid) -> tuple[int, int]:
    return round_half_down(centroid[0]), round_half_down(centroid[1])


def point_hit(centroid, gt) -> bool:
    gt = as_mask(gt)
    r, c = centroid_pixel(centroid)
    if not (0 <= r < gt.shape[0] and 0 <= c < gt.shape[1]):
        return False
    return bool(gt[r, c])


def localization_hit(result: FazResult, gt) -> bool:
    """True when the preliminary extraction's centroid lands inside ``gt``."""
    gt = as_mask(gt)
    if result.mask.shape != gt.shape:
        raise DimensionMismatch(f"result {result.mask.shape} vs ground truth {gt.shape}")
    return point_hit(result.preliminary_centroid, gt)


@dataclass(frozen=True)
class ManifestEntry:
    image: str  # as written in the manifest; reports use this string
    image_path: str
    gt_paths: tuple[str, ...]
    size_mm: float
    depth: str
    cohort: str
    artifact: str = ""

    @property
    def subgroup(self) -> str:
        return f"{self.size_mm:g}mm_{self.depth}_{self.cohort}"


def load_manifest(path) -> list[ManifestEntry]:
    base = os.path.dirname(os.path.abspath(path))
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        extra = [c for c in header if c not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS]
        if missing or extra:
            raise ManifestError(f"bad manifest header: missing {missing}, unexpected {extra}")
        entries = [_parse_entry(row, base, lineno) for lineno, row in enumerate(reader, start=2)]
    if not entries:
        raise ManifestError(f"manifest {path} has no entries")
    return entries


def _parse_entry(row: dict, base: str, lineno: int) -> ManifestEntry:
    def where():
        return f"line {lineno} ({row.get('image')!r})"

    def resolve(p):
        full = p if os.path.isabs(p) else os.path.join(base, p)
        if not os.path.isfile(full):
            raise ManifestError(f"{where()}: file not found: {p}")
        return full

    if not row.get("image") or not row.get("gt1"):
        raise ManifestError(f"{where()}: image and gt1 are required")
    gts = [resolve(row["gt1"])]
    if row.get("gt2"):
        gts.append(resolve(row["gt2"]))
    try:
        size_mm = float(row["size_mm"])
        PhysicalExtent(size_mm)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{where()}: bad size_mm {row.get('size_mm')!r}") from exc
    if row["depth"] not in DEPTHS:
        raise ManifestError(f"{where()}: depth must be one of {DEPTHS}")
    if row["cohort"] not in COHORTS:
        raise ManifestError(f"{where()}: cohort must be one of {COHORTS}")
    return ManifestEntry(
        image=row["image"],
        image_path=resolve(row["image"]),
        gt_paths=tuple(gts),
        size_mm=size_mm,
        depth=row["depth"],
        cohort=row["cohort"],
        artifact=row.get("artifact") or "",
    )


def evaluate_entry(entry: ManifestEntry, cfg: PipelineConfig) -> dict:
    img = load_grayscale(entry.image_path)
    gts = [load_mask(p) for p in entry.gt_paths]
    for gt in gts:
        if gt.shape != img.shape:
            raise ManifestError(f"{entry.image}: ground truth shape {gt.shape} != image {img.shape}")
    h, w = img.shape
    extent = PhysicalExtent(entry.size_mm)
    row = dict.fromkeys(ROW_FIELDS)
    row.update(image=entry.image, size_mm=entry.size_mm, depth=entry.depth, cohort=entry.cohort, artifact=entry.artifact)
    row["gt1_area_mm2"] = area_mm2(int(gts[0].sum()), w, h, extent)
    if len(gts) > 1:
        row["gt2_area_mm2"] = area_mm2(int(gts[1].sum()), w, h, extent)
        row["jaccard_gt1_gt2"] = jaccard(gts[0], gts[1])
    try:
        result = extract_faz(img, cfg.with_size_mm(entry.size_mm))
    except LocalizationFailed as exc:
        row.update(status="localization_failed", reason=exc.reason, hit=False)
        return row
    row.update(
        status="ok",
        reason="",
        hit=localization_hit(result, gts[0]),
        area_px=result.area_px,
        area_mm2=result.area_mm2,
        centroid_row=result.centroid[0],
        centroid_col=result.centroid[1],
        preliminary_row=result.preliminary_centroid[0],
        preliminary_col=result.preliminary_centroid[1],
        jaccard_system_gt1=jaccard(result.mask, gts[0]),
    )
    if len(gts) > 1:
        row["jaccard_system_gt2"] = jaccard(result.mask, gts[1])
    return row


def _summarize(rows: list[dict]) -> dict:
    hits = sum(1 for r in rows if r["hit"])
    localized = [r for r in rows if r["hit"]]
    pairings = {}
    for name, xkey, ykey, jkey in PAIRINGS:
        usable = [r for r in localized if r[xkey] is not None and r[ykey] is not None]
        js = [r[jkey] for r in usable]
        try:
            r_val = pearson([r[xkey] for r in usable], [r[ykey] for r in usable])
        except (ConstantSeries, LengthMismatch):
            r_val = None
        pairings[name] = {
            "n": len(usable),
            "pearson": r_val,
            "jaccard_mean": float(np.mean(js)) if js else None,
            "jaccard_min": min(js) if js else None,
            "jaccard_max": max(js) if js else None,
        }
    return {
        "total": len(rows),
        "hits": hits,
        "failures": sum(1 for r in rows if r["status"] == "localization_failed"),
        "hit_rate": hits / len(rows) if rows else None,
        "pairings": pairings,
    }


@dataclass
class EvalReport:
    rows: list[dict]
    subgroups: dict
    overall: dict
    config: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = [",".join(ROW_FIELDS)]
        for r in self.rows:
            lines.append(",".join(_csv_cell(r[f]) for f in ROW_FIELDS))
        return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    text = str(value)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _run_entry(args):
    entry, cfg = args
    try:
        return evaluate_entry(entry, cfg)
    except (FazError, OSError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"{entry.image}: {exc}") from exc


def batch_evaluate(entries, cfg: PipelineConfig = PipelineConfig(), workers: int = 1) -> EvalReport:
    entries = list(entries)
    if not entries:
        raise ManifestError("empty manifest")
    jobs = [(e, cfg) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_entry, jobs))
    else:
        rows = [_run_entry(j) for j in jobs]
    pairs = sorted(zip(entries, rows), key=lambda er: er[0].image)
    rows = [r for _, r in pairs]
    groups: dict[str, list[dict]] = {}
    for e, r in pairs:
        groups.setdefault(e.subgroup, []).append(r)
    return EvalReport(
        rows=rows,
        subgroups={k: _summarize(v) for k, v in sorted(groups.items())},
        overall=_summarize(rows),
        config=config_to_dict(cfg),
    )
