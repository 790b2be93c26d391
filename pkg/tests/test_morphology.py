import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fazseg.morphology import (
    StructuringElement,
    closing,
    dilate,
    disc,
    erode,
    opening,
    square,
    white_top_hat,
)
from oracles import brute_close, brute_dilate, brute_erode, brute_open, brute_top_hat

masks = arrays(bool, st.tuples(st.integers(3, 14), st.integers(3, 14)))
grays = arrays(np.uint8, st.tuples(st.integers(3, 14), st.integers(3, 14)))


def test_disc_shapes():
    assert disc(1).hits.tolist() == [[True]]
    assert disc(3).hits.all()
    d5 = disc(5).hits
    assert d5.sum() == 21 and not d5[0, 0] and d5[0, 1]
    assert disc(9).anchor == (4, 4)


def test_se_validation():
    with pytest.raises(ValueError):
        StructuringElement(np.ones((2, 3), bool))
    with pytest.raises(ValueError):
        StructuringElement(np.array([[1, 0, 1]], bool))
    with pytest.raises(ValueError):
        disc(4)


def test_erode_examples():
    single = np.zeros((7, 7), bool)
    single[3, 3] = True
    assert not erode(single, square(3)).any()
    full = np.ones((6, 6), bool)
    assert np.array_equal(erode(full, square(1)), full)

    sq = np.zeros((9, 9), bool)
    sq[2:7, 2:7] = True
    expected = brute_erode(sq, square(3).hits)
    assert np.array_equal(erode(sq, square(3)), expected)
    assert expected.sum() == 9 and expected[3:6, 3:6].all()


def test_dilate_examples(rng):
    single = np.zeros((7, 7), bool)
    single[3, 3] = True
    out = dilate(single, square(3))
    assert out.sum() == 9 and out[2:5, 2:5].all()
    assert not dilate(np.zeros((5, 5), bool), disc(5)).any()
    m = rng.random((16, 16)) < 0.2
    assert np.array_equal(dilate(m, square(3)), brute_dilate(m, square(3).hits))


def test_open_close_trivial():
    full = np.ones((10, 10), bool)
    assert np.array_equal(opening(full, disc(5)), full)
    assert not closing(np.zeros((10, 10), bool), disc(5)).any()


def test_asymmetric_element_matches_oracle(rng):
    hits = np.array([[0, 0, 1], [0, 1, 1], [0, 0, 0]], bool)
    se = StructuringElement(hits)
    for _ in range(10):
        m = rng.random((12, 12)) < 0.5
        g = rng.integers(0, 256, (12, 12), dtype=np.uint8)
        for x in (m, g):
            assert np.array_equal(erode(x, se), brute_erode(x, hits))
            assert np.array_equal(dilate(x, se), brute_dilate(x, hits))
            assert np.array_equal(opening(x, se), brute_open(x, hits))
            assert np.array_equal(closing(x, se), brute_close(x, hits))


def test_top_hat_examples():
    assert not white_top_hat(np.full((12, 12), 77, np.uint8), disc(5)).any()

    spike = np.zeros((9, 9), np.uint8)
    spike[4, 4] = 255
    assert np.array_equal(white_top_hat(spike, square(3)), brute_top_hat(spike, square(3).hits))
    assert np.array_equal(white_top_hat(spike, square(3)), spike)

    plateau = np.zeros((20, 20), np.uint8)
    plateau[4:16, 4:16] = 200
    th = white_top_hat(plateau, disc(5))
    assert np.array_equal(th, brute_top_hat(plateau, disc(5).hits))
    assert not th[6:14, 6:14].any()


@settings(max_examples=50)
@given(masks, masks)
def test_monotonicity(a, b):
    if a.shape != b.shape:
        return
    small, big = a & b, a | b
    se = disc(3)
    assert not (erode(small, se) & ~erode(big, se)).any()
    assert not (dilate(small, se) & ~dilate(big, se)).any()


@settings(max_examples=50)
@given(masks)
def test_duality_away_from_border(m):
    se = disc(3)
    lhs = erode(~m, se)
    rhs = ~dilate(m, se)
    assert np.array_equal(lhs[1:-1, 1:-1], rhs[1:-1, 1:-1])


@settings(max_examples=50)
@given(masks)
def test_binary_ordering_and_idempotence(m):
    se = disc(3)
    o, c = opening(m, se), closing(m, se)
    assert not (o & ~m).any()
    assert not (m & ~c).any()
    assert np.array_equal(opening(o, se), o)
    assert np.array_equal(closing(c, se), c)


@settings(max_examples=50)
@given(grays)
def test_gray_ordering_and_top_hat(g):
    se = disc(3)
    o, c = opening(g, se), closing(g, se)
    assert (o <= g).all() and (g <= c).all()
    th = white_top_hat(g, se)
    assert np.array_equal(th.astype(int), g.astype(int) - o.astype(int))
