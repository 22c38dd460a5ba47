import numpy as np
import pytest
from PIL import Image

from lanepipe.imageio import (
    ImageFormatError,
    decode_netpbm,
    encode_netpbm,
    read_image,
    write_pnm,
)


def test_ppm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, (7, 5, 3), dtype=np.uint8)
    write_pnm(tmp_path / "a.ppm", img)
    assert (tmp_path / "a.ppm").read_bytes()[:2] == b"P6"
    np.testing.assert_array_equal(read_image(tmp_path / "a.ppm"), img)


def test_pgm_round_trip_and_expansion(tmp_path, rng):
    img = rng.integers(0, 256, (4, 6), dtype=np.uint8)
    data = encode_netpbm(img)
    assert data.startswith(b"P5\n6 4\n255\n")
    np.testing.assert_array_equal(decode_netpbm(data), img)
    write_pnm(tmp_path / "g.pgm", img)
    rgb = read_image(tmp_path / "g.pgm")
    assert rgb.shape == (4, 6, 3)
    np.testing.assert_array_equal(rgb[:, :, 1], img)


def test_header_comments():
    data = b"P5\n# made by hand\n2 1\n# max\n255\n\x01\x02"
    np.testing.assert_array_equal(decode_netpbm(data), [[1, 2]])


@pytest.mark.parametrize(
    "data",
    [b"P3\n1 1\n255\n0 0 0", b"P5\n2 2\n255\n\x00", b"P5\n1 1\n65535\n\x00\x00", b"P5\n1"],
)
def test_malformed(data):
    with pytest.raises(ImageFormatError):
        decode_netpbm(data)


def test_encode_rejects_bad_arrays():
    with pytest.raises(ImageFormatError):
        encode_netpbm(np.full((2, 2), 300))
    with pytest.raises(ImageFormatError):
        encode_netpbm(np.zeros((2, 2, 4), dtype=np.uint8))


def test_png_ingest(tmp_path, rng):
    img = rng.integers(0, 256, (9, 11, 3), dtype=np.uint8)
    Image.fromarray(img).save(tmp_path / "x.png")
    np.testing.assert_array_equal(read_image(tmp_path / "x.png"), img)


def test_unknown_format(tmp_path):
    (tmp_path / "x.bmp").write_bytes(b"BM....")
    with pytest.raises(ImageFormatError):
        read_image(tmp_path / "x.bmp")
