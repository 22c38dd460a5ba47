import numpy as np
import pytest

from lanepipe.lane_decision import LaneReport
from lanepipe.pipeline import simulate
from lanepipe.refmodel import (
    FloatFrame,
    compare_stages,
    conv2d_ref,
    gray_float,
    gray_float_array,
    pipeline_ref,
)
from lanepipe.stream_core import FrameGeometry
from lanepipe.synth import road_image

IDENTITY = ((0, 0, 0), (0, 1, 0), (0, 0, 0))
BOX = ((1 / 9,) * 3,) * 3


def test_gray_float_examples():
    assert gray_float((255, 255, 255)) == pytest.approx(254.9745)
    assert gray_float((0, 0, 0)) == 0.0
    assert gray_float((255, 0, 0)) == pytest.approx(76.2195)
    rgb = np.array([[[255, 255, 255], [255, 0, 0]]])
    np.testing.assert_allclose(gray_float_array(rgb), [[254.9745, 76.2195]])


def test_conv2d_examples():
    rng = np.random.default_rng(0)
    f = rng.integers(0, 256, (5, 7))
    np.testing.assert_array_equal(conv2d_ref(f, IDENTITY).samples, f)
    const = conv2d_ref(np.full((5, 5), 40), BOX).samples
    assert const[2, 2] == pytest.approx(40.0)
    assert const[0, 0] == pytest.approx(40.0 * 4 / 9)  # zero padding at corners
    assert conv2d_ref(np.arange(9).reshape(3, 3), BOX).samples[1, 1] == pytest.approx(4.0)


def test_conv2d_rejects_non_3x3():
    with pytest.raises(ValueError):
        conv2d_ref(np.zeros((3, 3)), ((1, 1), (1, 1)))


def test_float_frame_checks_shape():
    with pytest.raises(ValueError):
        FloatFrame(3, 2, np.zeros((3, 2)))


def test_two_stripe_road():
    g = FrameGeometry()
    res = pipeline_ref(road_image(g, [120, 300]))
    assert res.report == LaneReport(1, 0, 120, 300, True)


def test_all_black_invalid():
    res = pipeline_ref(np.zeros((416, 416, 3), dtype=np.uint8))
    assert not res.report.valid
    assert not res.binary.any()


def test_streaming_equals_oracle_small():
    rng = np.random.default_rng(8)
    g = FrameGeometry(20, 12)
    img = rng.integers(0, 256, (12, 20, 3), dtype=np.uint8)
    res = simulate(img, g, capture=("gray", "avg"), record_magnitudes=True)
    ref = pipeline_ref(img)
    np.testing.assert_array_equal(res.stage_frames["gray"][0], ref.gray)
    np.testing.assert_array_equal(res.stage_frames["avg"][0], ref.avg)
    np.testing.assert_array_equal(res.magnitudes[0], ref.magnitude)
    np.testing.assert_array_equal(res.binary_frames[0], ref.binary)
    assert res.reports[0] == ref.report


def test_compare_stages_reports_quantisation_only():
    rng = np.random.default_rng(9)
    g = FrameGeometry(16, 10)
    img = rng.integers(0, 256, (10, 16, 3), dtype=np.uint8)
    res = simulate(img, g, capture=("gray", "avg"), record_magnitudes=True)
    out = compare_stages(
        img,
        {"gray": res.stage_frames["gray"][0], "avg": res.stage_frames["avg"][0],
         "sobel_magnitude": res.magnitudes[0]},
    )
    assert set(out) == {"gray", "avg", "sobel_magnitude"}
    assert out["gray"]["max"] <= 2
    assert out["avg"]["max"] < 1
    assert out["sobel_magnitude"]["max"] == 0
    assert 0 <= out["gray"]["mean"] <= out["gray"]["max"]
