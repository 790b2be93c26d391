import dataclasses

import numpy as np
import pytest

from fazseg.candidates import connected_components
from fazseg.errors import ConfigError, DegenerateImage, LocalizationFailed
from fazseg.image_core import PhysicalExtent
from fazseg.pipeline import (
    PipelineConfig,
    area_mm2,
    config_to_dict,
    extract_faz,
    format_config,
    load_config,
    parse_config,
    resolve_config,
)
from fazseg.synth import Artifact, SynthSpec, generate
from oracles import disc_mask


def jaccard(a, b):
    return (a & b).sum() / (a | b).sum()


def test_area_examples():
    ext3 = PhysicalExtent(3)
    assert area_mm2(0, 320, 320, ext3) == 0.0
    assert area_mm2(320 * 320, 320, 320, ext3) == 9.0
    assert area_mm2(1000, 320, 320, ext3) == 1000 * 9 / 102400 == 0.087890625


def test_area_scales_with_extent_squared():
    assert area_mm2(777, 320, 320, PhysicalExtent(6)) == 4 * area_mm2(777, 320, 320, PhysicalExtent(3))


@pytest.fixture(scope="module")
def centered_scene():
    spec = SynthSpec(faz_radii=(30, 30), rng_seed=7)
    img, gt = generate(spec)
    return img, gt


def test_centered_disc(centered_scene):
    img, gt = centered_scene
    assert np.array_equal(gt, disc_mask(gt.shape, (160, 160), 30))
    res = extract_faz(img)
    assert jaccard(res.mask, gt) >= 0.9
    assert np.hypot(res.centroid[0] - 160, res.centroid[1] - 160) <= 3


def test_result_invariants(centered_scene):
    img, _ = centered_scene
    cfg = PipelineConfig()
    res = extract_faz(img, cfg)
    assert res.area_px == res.mask.sum()
    (comp,) = connected_components(res.mask)
    r0, c0, r1, c1 = comp.bbox
    assert r0 <= res.centroid[0] <= r1 and c0 <= res.centroid[1] <= c1
    assert res.area_mm2 == res.area_px * 9.0 / (320 * 320)
    res6 = extract_faz(img, cfg.with_size_mm(6))
    assert np.array_equal(res6.mask, res.mask)
    assert res6.area_mm2 == 4 * res.area_mm2
    stages = [d.stage for d in res.diagnostics]
    assert stages == ["top_hat", "canny", "candidates", "filter", "select", "erode_seed", "region_grow"]


def test_deterministic(centered_scene):
    img, _ = centered_scene
    a, b = extract_faz(img), extract_faz(img.copy())
    assert np.array_equal(a.mask, b.mask)
    assert a.centroid == b.centroid


def test_all_black_fails():
    with pytest.raises(LocalizationFailed) as info:
        extract_faz(np.zeros((320, 320), np.uint8))
    assert isinstance(info.value.cause, DegenerateImage)


def test_border_strip_is_ignored():
    spec = SynthSpec(faz_radii=(28, 28), artifacts=(Artifact("left", 26, 25),), rng_seed=3)
    img, gt = generate(spec)
    res = extract_faz(img)
    r, c = (int(round(v)) for v in res.preliminary_centroid)
    assert gt[r, c]
    assert gt[int(round(res.centroid[0])), int(round(res.centroid[1]))]


def test_keep_stages(centered_scene):
    img, _ = centered_scene
    res = extract_faz(img, keep_stages=True)
    assert set(res.stages) >= {"tophat", "edges", "candidates", "preliminary", "seed", "final"}
    assert np.array_equal(res.stages["final"], res.mask)


def test_config_round_trip(tmp_path):
    cfg = dataclasses.replace(PipelineConfig(), tophat_se_size=11).with_size_mm(6)
    text = format_config(cfg)
    assert parse_config(text) == cfg
    p = tmp_path / "x.conf"
    p.write_text("# comment\n\ntophat_se_size = 11   # trailing\nsize_mm=6\n", encoding="utf-8")
    assert load_config(p) == cfg


def test_config_defaults_documented():
    d = config_to_dict(PipelineConfig())
    assert d["tophat_se_size"] == 9 and d["closing_se_size"] == 5
    assert d["opening_se_size"] == 7 and d["seed_erosion_se_size"] == 5
    assert (d["canny_sigma"], d["canny_low_factor"], d["canny_high_factor"]) == (1.4, 0.66, 1.33)
    assert (d["border_margin_frac"], d["min_solidity"], d["min_area_px"]) == (0.10, 0.35, 30)
    assert d["grow_tolerance_frac"] == 0.30 and d["grow_connectivity"] == 8
    assert d["grow_max_iterations"] == 1000 and d["grow_band_floor"] == 5.0


@pytest.mark.parametrize(
    "text",
    ["bogus = 1\n", "tophat_se_size = eight\n", "tophat_se_size = 8\n", "no equals sign\n", "size_mm = 3\nsize_mm = 6\n",
     "canny_low_factor = 2\n", "grow_deletion = maybe\n"],
)  # fmt: skip
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_search_order(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert resolve_config() == PipelineConfig()
    (tmp_path / "faz.conf").write_text("opening_se_size = 9\n", encoding="utf-8")
    assert resolve_config().opening_se_size == 9
    other = tmp_path / "other.conf"
    other.write_text("opening_se_size = 11\n", encoding="utf-8")
    assert resolve_config(other).opening_se_size == 11
