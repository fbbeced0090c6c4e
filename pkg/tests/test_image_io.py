import numpy as np
import pytest

from envlight import image_io


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.uniform(size=(20, 30, 3))
    path = tmp_path / "x.ppm"
    image_io.write_ppm(path, img)
    back = image_io.read_ppm(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 0.5 / 255.0 + 1e-12


def test_ppm_quantization_exact(tmp_path):
    img = np.zeros((4, 4, 3))
    img[..., 0] = 128.0 / 255.0
    path = tmp_path / "q.ppm"
    image_io.write_ppm(path, img)
    assert np.array_equal(image_io.read_ppm(path), img)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    mask = rng.uniform(size=(16, 32)) > 0.5
    path = tmp_path / "m.pgm"
    image_io.write_pgm(path, mask)
    assert np.array_equal(image_io.read_pgm(path), mask)


def test_pfm_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    img = (rng.uniform(size=(12, 24, 3)) * 17.0).astype(np.float32)
    path = tmp_path / "x.pfm"
    image_io.write_pfm(path, img)
    assert np.array_equal(image_io.read_pfm(path), img)


def test_magic_mismatch(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
    with pytest.raises(ValueError):
        image_io.read_ppm(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "trunc.ppm"
    path.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    with pytest.raises(ValueError):
        image_io.read_ppm(path)


def test_gamma_round_trip():
    x = np.linspace(0.0, 1.0, 64)
    assert np.allclose(image_io.decode_gamma(image_io.encode_gamma(x)), x, atol=1e-12)
