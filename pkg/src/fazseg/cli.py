"""Command-line entry point: ``segment``, ``evaluate``, ``synth`` and ``overlay``.

Exit status: 0 success, 1 usage error, 2 I/O or format error,
3 localization failure (``segment`` only).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from PIL import Image

from . import __version__
from .candidates import boundary_pixels
from .edges import magnitude_to_u8
from .errors import ConfigError, FazError, LocalizationFailed, ManifestError
from .evaluation import batch_evaluate, load_manifest
from .image_core import as_gray, as_mask, check_same_shape, load_grayscale, load_mask, save_gray, save_mask
from .pipeline import extract_faz, resolve_config
from .synth import SynthSpec, generate_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_LOCALIZATION = 3

CONTOUR_RGB = (0, 0, 255)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def overlay(img, mask, out) -> None:
    """Write ``img`` as RGB with the 1-px mask contour burned in."""
    img = as_gray(img)
    mask = as_mask(mask)
    check_same_shape(img, mask)
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    rgb[boundary_pixels(mask)] = CONTOUR_RGB
    Image.fromarray(rgb).save(os.fspath(out), format="PNG")


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fazseg", description="Foveal avascular zone segmentation in OCT-A images.")
    parser.add_argument("--version", action="version", version=f"fazseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    seg = sub.add_parser("segment", help="segment the FAZ in one image")
    seg.add_argument("image")
    seg.add_argument("--config", help="config file (default: ./faz.conf if present)")
    seg.add_argument("--size-mm", type=_positive_float, help="side length of the capture, usually 3 or 6")
    seg.add_argument("--out-mask")
    seg.add_argument("--out-json")
    seg.add_argument("--debug-dir", help="write per-stage intermediate images here")
    seg.add_argument("--overlay", help="write the input with the FAZ contour burned in")

    ev = sub.add_parser("evaluate", help="run the pipeline over a manifest and report agreement")
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--config")
    ev.add_argument("--report-json", required=True)
    ev.add_argument("--report-csv")
    ev.add_argument("--workers", type=int, default=1)

    syn = sub.add_parser("synth", help="write a synthetic image suite with ground truth")
    syn.add_argument("--n", type=int, required=True)
    syn.add_argument("--seed", type=int, required=True)
    syn.add_argument("--out-dir", required=True)
    syn.add_argument("--artifacts", choices=("on", "off"), default="off")
    syn.add_argument("--noise-sigma", type=float, default=SynthSpec.noise_sigma)

    ov = sub.add_parser("overlay", help="burn a mask contour into an image")
    ov.add_argument("image")
    ov.add_argument("mask")
    ov.add_argument("--out", required=True)
    return parser


def _dump_stages(stages: dict, debug_dir: str) -> None:
    os.makedirs(debug_dir, exist_ok=True)
    for name, arr in stages.items():
        path = os.path.join(debug_dir, f"{name}.png")
        if arr.dtype == bool:
            save_mask(arr, path)
        elif arr.dtype == np.uint8:
            save_gray(arr, path)
        else:
            save_gray(magnitude_to_u8(arr), path)


def _emit_json(record: dict, path: str | None) -> None:
    text = json.dumps(record, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_segment(args) -> int:
    cfg = resolve_config(args.config)
    if args.size_mm is not None:
        cfg = cfg.with_size_mm(args.size_mm)
    img = load_grayscale(args.image)
    h, w = img.shape
    record = {"image": args.image, "width": w, "height": h, "size_mm": cfg.extent.size_mm}
    try:
        result = extract_faz(img, cfg, keep_stages=bool(args.debug_dir))
    except LocalizationFailed as exc:
        record.update(area_px=None, area_mm2=None, centroid=None, status="localization_failed", reason=exc.reason)
        _emit_json(record, args.out_json)
        print(f"fazseg: localization failed: {exc.reason}", file=sys.stderr)
        return EXIT_LOCALIZATION
    record.update(
        area_px=result.area_px,
        area_mm2=result.area_mm2,
        centroid=[result.centroid[0], result.centroid[1]],
        status="ok",
    )
    if args.out_mask:
        save_mask(result.mask, args.out_mask)
    if args.overlay:
        overlay(img, result.mask, args.overlay)
    if args.debug_dir:
        _dump_stages(result.stages, args.debug_dir)
    _emit_json(record, args.out_json)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    cfg = resolve_config(args.config)
    report = batch_evaluate(load_manifest(args.manifest), cfg, workers=args.workers)
    with open(args.report_json, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    if args.report_csv:
        with open(args.report_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    o = report.overall
    print(f"localized {o['hits']}/{o['total']}", file=sys.stderr)
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    base = SynthSpec(noise_sigma=args.noise_sigma)
    generate_suite(args.n, base, args.seed, args.out_dir, artifacts=args.artifacts == "on")
    return EXIT_OK


def _cmd_overlay(args) -> int:
    overlay(load_grayscale(args.image), load_mask(args.mask), args.out)
    return EXIT_OK


COMMANDS = {
    "segment": _cmd_segment,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "overlay": _cmd_overlay,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(str(exc) if str(exc).endswith("\n") else f"{exc}\n")
        return EXIT_USAGE
    except LocalizationFailed as exc:
        print(f"fazseg: localization failed: {exc.reason}", file=sys.stderr)
        return EXIT_LOCALIZATION
    except (FazError, OSError, ValueError) as exc:
        kind = "config" if isinstance(exc, ConfigError) else "manifest" if isinstance(exc, ManifestError) else "error"
        print(f"fazseg: {kind}: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())
