import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelforge.pnm import (PNMError, quantize, read_image, read_pgm, read_pgm_raw,
                             write_image, write_pgm, write_pgm_raw)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 255, 1000, 65535]),
       st.integers(0, 2 ** 31 - 1))
def test_raw_round_trip(tmp_path_factory, h, w, maxval, seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, maxval + 1, size=(h, w))
    path = tmp_path_factory.mktemp("pgm") / "a.pgm"
    write_pgm_raw(path, data, maxval)
    back, mv = read_pgm_raw(path)
    assert mv == maxval
    np.testing.assert_array_equal(back, data)


def test_bit_exact_file_bytes(tmp_path):
    path = tmp_path / "b.pgm"
    write_pgm_raw(path, np.array([[0, 1], [256, 65535]]), 65535)
    assert path.read_bytes() == b"P5\n2 2\n65535\n" + bytes([0, 0, 0, 1, 1, 0, 255, 255])
    write_pgm_raw(path, np.array([[7, 200]]), 255)
    assert path.read_bytes() == b"P5\n2 1\n255\n\x07\xc8"


def test_header_comments_and_whitespace(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n3  1\n# depth\n255\n\x00\x80\xff")
    img = read_pgm(path)
    np.testing.assert_allclose(img, [[0, 128 / 255, 1]])


@pytest.mark.parametrize("bits", [8, 16])
def test_float_round_trip(tmp_path, bits):
    maxval = 255 if bits == 8 else 65535
    rng = np.random.default_rng(bits)
    img = rng.integers(0, maxval + 1, size=(6, 5)) / maxval
    path = tmp_path / "f.pgm"
    write_pgm(path, img, bits)
    np.testing.assert_array_equal(read_pgm(path), img)


def test_quantize_clamps():
    np.testing.assert_array_equal(quantize(np.array([-0.2, 0.5, 1.7]), 255), [0, 128, 255])


def test_errors(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(PNMError):
        read_pgm_raw(bad)
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    with pytest.raises(PNMError):
        read_pgm_raw(bad)
    bad.write_bytes(b"P5\nx 4\n255\n\x00")
    with pytest.raises(PNMError):
        read_pgm_raw(bad)
    with pytest.raises(PNMError):
        write_pgm_raw(bad, np.array([[300]]), 255)
    with pytest.raises(PNMError):
        write_pgm_raw(bad, np.zeros(3, dtype=int), 255)
    with pytest.raises(PNMError):
        write_pgm(bad, np.zeros((2, 2)), bits=12)


@pytest.mark.parametrize("bits", [8, 16])
def test_png_via_pillow(tmp_path, bits):
    pytest.importorskip("PIL")
    maxval = 255 if bits == 8 else 65535
    img = np.arange(12).reshape(3, 4) / 11.0
    path = tmp_path / "g.png"
    write_image(path, img, bits)
    np.testing.assert_allclose(read_image(path), quantize(img, maxval) / maxval)


def test_read_image_dispatches_pgm(tmp_path):
    path = tmp_path / "h.pgm"
    write_image(path, np.eye(3), 8)
    np.testing.assert_array_equal(read_image(path), np.eye(3))
