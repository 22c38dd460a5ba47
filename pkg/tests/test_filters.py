import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanepipe.filters import (
    MAX_MAGNITUDE,
    SobelConfig,
    average,
    binarize,
    sobel_gradients,
    sobel_magnitude,
)
from lanepipe.refmodel import average_int, conv2d_ref, sobel_magnitude_int
from lanepipe.stream_core import ConfigurationError
from lanepipe.window_engine import Window3x3

taps = st.lists(st.integers(0, 255), min_size=9, max_size=9)


def test_average_examples():
    assert average([9] * 9) == 9
    assert average(list(range(9))) == 4
    assert average([255] * 8 + [254]) == 254
    assert average(Window3x3(tuple([10] * 9), (0, 0))) == 10


def test_vertical_step_gives_full_response():
    w = [0, 0, 255] * 3
    assert sobel_gradients(w) == (1020, 0)
    assert sobel_magnitude(w) == 1020
    assert binarize(sobel_magnitude(w)) == 255


def test_diagonal_corner():
    w = [0, 0, 0, 0, 0, 255, 0, 255, 255]
    assert sobel_gradients(w) == (765, 765)
    assert sobel_magnitude(w) == 1530
    assert sobel_magnitude([0] * 9) == 0


def test_binarize_threshold_is_inclusive():
    cfg = SobelConfig(100)
    assert binarize(99, cfg) == 0
    assert binarize(100, cfg) == 255
    assert binarize(0, SobelConfig(0)) == 255


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SobelConfig(-1)
    with pytest.raises(ConfigurationError):
        SobelConfig(MAX_MAGNITUDE + 1)
    with pytest.raises(ConfigurationError):
        SobelConfig(100, white_value=1)


@given(taps, st.integers(-255, 255))
def test_dc_offset_leaves_gradient_unchanged(t, k):
    shifted = [min(255, max(0, v + k)) for v in t]
    if all(0 <= v + k <= 255 for v in t):
        assert sobel_gradients(shifted) == sobel_gradients(t)


@given(taps)
def test_complement_symmetry(t):
    inv = [255 - v for v in t]
    gx, gy = sobel_gradients(t)
    assert sobel_gradients(inv) == (-gx, -gy)
    assert sobel_magnitude(inv) == sobel_magnitude(t)


@given(taps)
def test_ranges(t):
    assert 0 <= sobel_magnitude(t) <= MAX_MAGNITUDE
    assert min(t) <= average(t) <= max(t)
    assert binarize(sobel_magnitude(t)) in (0, 255)


def test_integer_oracle_matches_float_nested_loops():
    rng = np.random.default_rng(3)
    g = rng.integers(0, 256, (12, 9))
    ref_avg = conv2d_ref(g, ((1, 1, 1),) * 3).samples
    np.testing.assert_array_equal(average_int(g), np.floor(ref_avg / 9 + 1e-9).astype(int))
    gx = conv2d_ref(g, ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))).samples
    gy = conv2d_ref(g, ((-1, -2, -1), (0, 0, 0), (1, 2, 1))).samples
    np.testing.assert_array_equal(sobel_magnitude_int(g), np.abs(gx) + np.abs(gy))
