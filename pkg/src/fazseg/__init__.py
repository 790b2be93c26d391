"""Automatic localization and segmentation of the foveal avascular zone in OCT-A images."""

__version__ = "0.1.0"

from .errors import FazError, LocalizationFailed
from .image_core import PhysicalExtent, invert, load_grayscale, mean_intensity, save_mask
from .pipeline import FazResult, PipelineConfig, area_mm2, extract_faz, load_config

__all__ = [
    "FazError",
    "FazResult",
    "LocalizationFailed",
    "PhysicalExtent",
    "PipelineConfig",
    "area_mm2",
    "extract_faz",
    "invert",
    "load_config",
    "load_grayscale",
    "mean_intensity",
    "save_mask",
]
