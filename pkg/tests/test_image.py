import numpy as np
import pytest

from spectv.image import (check_image, decode_image_bytes, encode_png_bytes,
                          lcc_to_rgb, load_image, offset_decode, offset_encode,
                          rgb_to_lcc, save_image)


def test_check_image_accepts_gray_and_rgb(rng):
    g = rng.random((5, 7))
    c = rng.random((5, 7, 3))
    assert check_image(g).shape == (5, 7)
    assert check_image(c).shape == (5, 7, 3)


def test_check_image_rejects_bad_shapes(rng):
    with pytest.raises(ValueError):
        check_image(rng.random(12))
    with pytest.raises(ValueError):
        check_image(rng.random((4, 4, 2)))
    with pytest.raises(ValueError):
        check_image(rng.random((4, 4, 3)), channels=1)
    with pytest.raises(ValueError):
        check_image(np.array([[np.nan, 0.0], [0.0, 0.0]]))


def test_lcc_is_exact_inverse(rng):
    img = rng.random((9, 11, 3))
    back = lcc_to_rgb(rgb_to_lcc(img))
    assert np.allclose(back, img, atol=1e-14)


def test_lcc_of_gray_pixels_has_zero_chroma():
    img = np.full((4, 4, 3), 0.37)
    lcc = rgb_to_lcc(img)
    assert np.allclose(lcc[:, :, 0], 0.37, atol=1e-14)
    assert np.allclose(lcc[:, :, 1:], 0.0, atol=1e-14)


def test_offset_encoding_round_trip(rng):
    band = rng.uniform(-0.5, 0.5, size=(6, 6))
    assert np.allclose(offset_decode(offset_encode(band)), band, atol=1e-14)


def test_offset_encoding_clips_out_of_range():
    band = np.array([[-0.9, 0.9]])
    enc = offset_encode(band)
    assert enc.min() >= 0.0 and enc.max() <= 1.0
    assert np.allclose(enc, [[0.0, 1.0]])


@pytest.mark.parametrize("ext", ["png", "ppm", "pgm"])
def test_save_load_round_trip_8bit(tmp_path, rng, ext):
    img = rng.random((16, 20))
    if ext == "ppm":
        img = rng.random((16, 20, 3))
    path = tmp_path / f"img.{ext}"
    save_image(img, str(path))
    back = load_image(str(path))
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12


def test_save_load_round_trip_16bit(tmp_path, rng):
    img = rng.random((16, 20))
    path = tmp_path / "img.png"
    save_image(img, str(path), bit_depth=16)
    back = load_image(str(path))
    assert np.abs(back - img).max() <= 0.5 / 65535 + 1e-12


def test_save_16bit_preserves_rgb_channels(tmp_path):
    img = np.zeros((4, 4, 3))
    img[:, :, 0] = 0.25
    img[:, :, 2] = 0.75
    path = tmp_path / "rgb16.png"
    save_image(img, str(path), bit_depth=16)
    back = load_image(str(path))
    assert np.allclose(back[:, :, 0], 0.25, atol=1e-4)
    assert np.allclose(back[:, :, 1], 0.0, atol=1e-4)
    assert np.allclose(back[:, :, 2], 0.75, atol=1e-4)


def test_load_image_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_image(str(tmp_path / "nope.png"))


def test_load_image_unsupported_extension(tmp_path):
    path = tmp_path / "img.xyz"
    path.write_bytes(b"not an image")
    with pytest.raises(ValueError):
        load_image(str(path))


def test_png_bytes_match_saved_file(tmp_path, rng):
    # the service encodes to memory, the CLI to disk; both must agree
    img = rng.random((12, 13, 3))
    path = tmp_path / "img.png"
    save_image(img, str(path))
    assert path.read_bytes() == encode_png_bytes(img)


def test_png_encoding_is_deterministic(rng):
    img = rng.random((10, 10))
    assert encode_png_bytes(img) == encode_png_bytes(img.copy())


def test_decode_inverts_encode(rng):
    img = rng.random((8, 9, 3))
    back = decode_image_bytes(encode_png_bytes(img, bit_depth=16))
    assert np.abs(back - img).max() <= 0.5 / 65535 + 1e-12


def test_decode_rejects_garbage():
    with pytest.raises(ValueError):
        decode_image_bytes(b"\x00\x01\x02")
