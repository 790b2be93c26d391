import numpy as np
import pytest

from fazseg.candidates import connected_components
from fazseg.errors import DimensionMismatch, EmptySeed
from fazseg.morphology import disc, erode
from fazseg.region_grow import GrowParams, erode_seed, grow, grow_region
from oracles import brute_erode, disc_mask, flood_components, NEIGHBORS_8


def disc_scene(dark=10, bright=200, radius=15, size=64):
    gt = disc_mask((size, size), (size // 2, size // 2), radius)
    return np.where(gt, dark, bright).astype(np.uint8), gt


def test_band_arithmetic():
    p = GrowParams(tolerance_frac=0.3, band_floor=0)
    assert p.band(10) == pytest.approx((7, 13))
    assert GrowParams(band_floor=5).band(10) == (5, 15)


def test_dark_disc_grows_to_boundary():
    img, gt = disc_scene()
    seed = erode(gt, disc(9))
    # oracle: flood fill over pixels with intensity inside [7, 13], from the center
    in_band = (img >= 7) & (img <= 13)
    oracle = [c for c in flood_components(in_band, NEIGHBORS_8) if (32, 32) in c][0]
    out = grow(img, seed, GrowParams(band_floor=0))
    assert {tuple(p) for p in np.argwhere(out)} == oracle
    assert np.array_equal(out, gt)


def test_seed_already_at_fixed_point():
    img, gt = disc_scene()
    res = grow_region(img, gt)
    assert res.iterations == 1 and res.converged
    assert np.array_equal(res.mask, gt)


def test_bright_pixels_in_seed_are_deleted():
    img, gt = disc_scene(dark=40, bright=200)
    bright = [(32, 20), (25, 32), (40, 38)]
    for p in bright:
        assert gt[p]
        img[p] = 230
    res = grow_region(img, gt)
    for p in bright:
        assert not res.mask[p]
    assert res.converged
    assert res.exception_count == 0
    lo, hi = res.band
    vals = img[res.mask]
    assert ((vals >= lo) & (vals <= hi)).all()


def test_out_of_band_anchor_is_kept_and_flagged():
    img, gt = disc_scene(dark=40)
    img[32, 32] = 250  # the anchor: nearest seed pixel to the seed centroid
    res = grow_region(img, gt)
    assert res.anchor == (32, 32)
    assert res.mask[32, 32]
    assert res.exceptions[32, 32] and res.exception_count == 1


def test_output_is_one_component_with_anchor(rng):
    img = rng.integers(20, 60, (48, 48), dtype=np.uint8)
    seed = np.zeros_like(img, bool)
    seed[20:28, 20:28] = True
    res = grow_region(img, seed, GrowParams(tolerance_frac=0.2, band_floor=0))
    comps = connected_components(res.mask)
    assert len(comps) == 1
    assert res.mask[res.anchor]


def test_deletion_disabled_is_monotone(rng):
    img = rng.integers(0, 256, (40, 40), dtype=np.uint8)
    seed = np.zeros_like(img, bool)
    seed[18:22, 18:22] = True
    prev = seed
    for k in range(1, 8):
        out = grow(img, seed, GrowParams(deletion=False, max_iterations=k))
        assert not (prev & ~out).any()
        prev = out


def test_sequential_refresh(rng):
    img, gt = disc_scene(dark=40)
    seed = erode(gt, disc(9))
    out = grow(img, seed, GrowParams(recompute_period=1))
    assert np.array_equal(out, gt)


def test_errors():
    img, gt = disc_scene()
    with pytest.raises(EmptySeed):
        grow(img, np.zeros_like(gt))
    with pytest.raises(DimensionMismatch):
        grow(img, gt[:-1])
    with pytest.raises(ValueError):
        GrowParams(tolerance_frac=1.5)
    with pytest.raises(ValueError):
        GrowParams(connectivity=6)


def test_grow_is_deterministic(rng):
    img = rng.integers(10, 90, (50, 50), dtype=np.uint8)
    seed = np.zeros_like(img, bool)
    seed[24:27, 24:27] = True
    a = grow_region(img, seed)
    b = grow_region(img.copy(), seed.copy())
    assert np.array_equal(a.mask, b.mask) and a.iterations == b.iterations


def candidate_of(mask):
    (c,) = connected_components(mask)
    return c


def test_erode_seed_square():
    m = np.zeros((21, 21), bool)
    m[6:15, 6:15] = True
    out = erode_seed(candidate_of(m), disc(5), m.shape)
    assert np.array_equal(out, brute_erode(m, disc(5).hits))
    assert out.any() and out[10, 10]


def test_erode_seed_fallbacks():
    single = np.zeros((9, 9), bool)
    single[4, 5] = True
    out = erode_seed(candidate_of(single), disc(5), single.shape)
    assert np.argwhere(out).tolist() == [[4, 5]]

    small = np.zeros((9, 9), bool)
    small[3:6, 3:6] = True
    out = erode_seed(candidate_of(small), disc(5), small.shape)
    assert np.argwhere(out).tolist() == [[4, 4]]
