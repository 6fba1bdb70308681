"""Grayscale conversion, image decoding, integral images, and face cropping."""

import io
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest
from PIL import Image

from moodtunes.faces import image as fimage
from moodtunes.faces.image import (
    BoxError,
    GrayImage,
    ImageFormatError,
    crop_resize,
    decode_image,
    decode_pgm,
    integral_image,
    to_grayscale,
)

# ---------------------------------------------------------------- oracles


def luma_oracle(r, g, b):
    """Exact decimal luma with half-up rounding, independent of the integer path."""
    value = (
        Decimal(int(r)) * Decimal("0.299")
        + Decimal(int(g)) * Decimal("0.587")
        + Decimal(int(b)) * Decimal("0.114")
    )
    return int(value.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def integral_oracle(pixels, x, y, w, h):
    """Brute-force slice sums for a rect, plain and squared."""
    window = pixels[y : y + h, x : x + w].astype(np.int64)
    return int(window.sum()), int((window * window).sum())


def bilinear_oracle(pixels, out_size):
    """Scalar center-aligned bilinear resize of a full image."""
    h, w = pixels.shape
    out = np.zeros((out_size, out_size), dtype=np.uint8)
    for i in range(out_size):
        for j in range(out_size):
            sy = min(max((i + 0.5) * h / out_size - 0.5, 0.0), h - 1)
            sx = min(max((j + 0.5) * w / out_size - 0.5, 0.0), w - 1)
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = sy - y0, sx - x0
            top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
            bot = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
            blended = top * (1 - fy) + bot * fy
            out[i, j] = min(max(int(np.floor(blended + 0.5)), 0), 255)
    return out


# ---------------------------------------------------------------- GrayImage


def test_gray_image_holds_shape_and_pixels():
    px = np.arange(12, dtype=np.uint8).reshape(3, 4)
    img = GrayImage.from_array(px)
    assert (img.width, img.height) == (4, 3)
    assert img.pixels[2, 3] == 11


def test_gray_image_rejects_wrong_dtype_and_shape():
    with pytest.raises(ValueError):
        GrayImage(width=2, height=2, pixels=np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(ValueError):
        GrayImage(width=3, height=2, pixels=np.zeros((2, 2), dtype=np.uint8))


# ---------------------------------------------------------------- grayscale


def test_pure_red_maps_to_76():
    rgb = np.zeros((1, 1, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    assert to_grayscale(rgb).pixels[0, 0] == 76


def test_extremes_and_neutral_grays_are_fixed_points():
    for v in (0, 17, 128, 255):
        rgb = np.full((2, 2, 3), v, dtype=np.uint8)
        assert (to_grayscale(rgb).pixels == v).all()


def test_luma_matches_decimal_half_up_oracle_on_random_colors():
    rng = np.random.default_rng(7)
    colors = rng.integers(0, 256, size=(200, 3))
    rgb = colors.reshape(200, 1, 3).astype(np.uint8)
    got = to_grayscale(rgb).pixels[:, 0]
    for idx, (r, g, b) in enumerate(colors):
        assert got[idx] == luma_oracle(r, g, b), (r, g, b)


def test_two_dimensional_input_passes_through():
    px = np.arange(6, dtype=np.uint8).reshape(2, 3)
    assert (to_grayscale(px).pixels == px).all()


def test_single_channel_third_axis_is_squeezed():
    px = np.arange(6, dtype=np.uint8).reshape(2, 3, 1)
    assert (to_grayscale(px).pixels == px[:, :, 0]).all()


def test_unsupported_channel_count_is_rejected():
    with pytest.raises(ImageFormatError):
        to_grayscale(np.zeros((2, 2, 4), dtype=np.uint8))


# ---------------------------------------------------------------- PGM


def make_pgm(width, height, maxval, raster):
    header = f"P5\n{width} {height}\n{maxval}\n".encode()
    return header + raster


def test_pgm_round_trip():
    raster = bytes(range(12))
    img = decode_pgm(make_pgm(4, 3, 255, raster))
    assert (img.width, img.height) == (4, 3)
    assert (img.pixels.reshape(-1) == np.frombuffer(raster, dtype=np.uint8)).all()


def test_pgm_header_comments_and_odd_whitespace():
    data = b"P5 # magic\n# a comment line\n3\t2 # size\n255\n" + bytes(6)
    img = decode_pgm(data)
    assert (img.width, img.height) == (3, 2)


def test_pgm_low_maxval_keeps_raw_values():
    raster = bytes([0, 50, 100, 199])
    img = decode_pgm(make_pgm(2, 2, 200, raster))
    assert img.pixels[1, 1] == 199


def test_pgm_truncated_raster_is_rejected():
    with pytest.raises(ImageFormatError):
        decode_pgm(make_pgm(4, 4, 255, bytes(15)))


def test_pgm_wrong_magic_is_rejected():
    with pytest.raises(ImageFormatError):
        decode_pgm(b"P2\n2 2\n255\n" + bytes(4))


@pytest.mark.parametrize("maxval", [0, 256, 65535])
def test_pgm_unsupported_maxval_is_rejected(maxval):
    with pytest.raises(ImageFormatError):
        decode_pgm(make_pgm(2, 2, maxval, bytes(4)))


# ---------------------------------------------------------------- decode_image


def encode(array, fmt):
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format=fmt)
    return buf.getvalue()


def test_decode_image_png_grayscale_is_lossless():
    rng = np.random.default_rng(3)
    px = rng.integers(0, 256, size=(9, 13)).astype(np.uint8)
    img = decode_image(encode(px, "PNG"))
    assert (img.pixels == px).all()


def test_decode_image_png_rgb_matches_luma_oracle():
    rng = np.random.default_rng(4)
    rgb = rng.integers(0, 256, size=(5, 7, 3)).astype(np.uint8)
    img = decode_image(encode(rgb, "PNG"))
    for y in range(5):
        for x in range(7):
            assert img.pixels[y, x] == luma_oracle(*rgb[y, x])


def test_decode_image_jpeg_is_close_despite_lossy_compression():
    rng = np.random.default_rng(5)
    base = np.full((32, 32, 3), 120, dtype=np.uint8)
    base += rng.integers(0, 20, size=base.shape).astype(np.uint8)
    img = decode_image(encode(base, "JPEG"))
    reference = to_grayscale(base).pixels
    assert (img.width, img.height) == (32, 32)
    assert np.abs(img.pixels.astype(int) - reference.astype(int)).mean() < 8


def test_decode_image_dispatches_pgm():
    img = decode_image(make_pgm(2, 2, 255, bytes([9, 8, 7, 6])))
    assert img.pixels[0, 0] == 9


def test_decode_image_rejects_garbage():
    with pytest.raises(ImageFormatError):
        decode_image(b"\x00\x01\x02 definitely not an image")


# ---------------------------------------------------------------- integral


def test_integral_is_inclusive_at_origin_and_corner():
    px = np.arange(1, 13, dtype=np.uint8).reshape(3, 4)
    ii, sq = integral_image(GrayImage.from_array(px))
    assert ii[0, 0] == px[0, 0]
    assert ii[-1, -1] == px.sum()
    assert sq[-1, -1] == (px.astype(np.int64) ** 2).sum()


def test_integral_rect_sums_match_brute_force_on_random_rects():
    rng = np.random.default_rng(11)
    px = rng.integers(0, 256, size=(37, 29)).astype(np.uint8)
    ii, sq = integral_image(GrayImage.from_array(px))
    padded = fimage.pad_integral(ii)
    sq_padded = fimage.pad_integral(sq)
    for _ in range(50):
        x = int(rng.integers(0, 29))
        y = int(rng.integers(0, 37))
        w = int(rng.integers(1, 29 - x + 1))
        h = int(rng.integers(1, 37 - y + 1))
        want_sum, want_sq = integral_oracle(px, x, y, w, h)
        assert fimage.rect_sum(padded, x, y, w, h) == want_sum
        assert fimage.rect_sum(sq_padded, x, y, w, h) == want_sq


def test_integral_dtype_survives_255_everywhere():
    # 255^2 * 4096 overflows int32; the accumulators must be wider
    px = np.full((64, 64), 255, dtype=np.uint8)
    _, sq = integral_image(GrayImage.from_array(px))
    assert sq[-1, -1] == 255 * 255 * 64 * 64


# ---------------------------------------------------------------- crop_resize


def test_crop_exact_window_is_identity():
    rng = np.random.default_rng(21)
    px = rng.integers(0, 256, size=(60, 60)).astype(np.uint8)
    img = GrayImage.from_array(px)
    out = crop_resize(img, (5, 7, 48, 48))
    assert (out.pixels == px[7:55, 5:53]).all()


def test_crop_constant_region_stays_constant():
    px = np.full((100, 100), 77, dtype=np.uint8)
    out = crop_resize(GrayImage.from_array(px), (10, 10, 63, 63))
    assert (out.width, out.height) == (48, 48)
    assert (out.pixels == 77).all()


def test_crop_matches_scalar_bilinear_oracle():
    rng = np.random.default_rng(22)
    px = rng.integers(0, 256, size=(30, 30)).astype(np.uint8)
    img = GrayImage.from_array(px)
    out = crop_resize(img, (0, 0, 30, 30))
    assert (out.pixels == bilinear_oracle(px, 48)).all()


def test_crop_upscales_tiny_checkerboard():
    px = np.array([[0, 255], [255, 0]], dtype=np.uint8)
    out = crop_resize(GrayImage.from_array(px), (0, 0, 2, 2))
    assert (out.width, out.height) == (48, 48)
    assert (out.pixels == bilinear_oracle(px, 48)).all()
    # corners sample the nearest source pixel
    assert out.pixels[0, 0] == 0 and out.pixels[0, -1] == 255


def test_crop_accepts_box_objects_with_attributes():
    class Box:
        x, y, w, h = 2, 3, 20, 20

    px = np.random.default_rng(23).integers(0, 256, size=(40, 40)).astype(np.uint8)
    img = GrayImage.from_array(px)
    assert (crop_resize(img, Box()).pixels == crop_resize(img, (2, 3, 20, 20)).pixels).all()


@pytest.mark.parametrize(
    "box",
    [(0, 0, 0, 10), (0, 0, 10, 0), (-1, 0, 10, 10), (95, 0, 10, 10), (0, 95, 10, 10)],
)
def test_crop_rejects_degenerate_or_out_of_bounds_boxes(box):
    px = np.zeros((100, 100), dtype=np.uint8)
    with pytest.raises(BoxError):
        crop_resize(GrayImage.from_array(px), box)


def test_crop_output_contract():
    px = np.random.default_rng(24).integers(0, 256, size=(120, 90)).astype(np.uint8)
    out = crop_resize(GrayImage.from_array(px), (3, 9, 80, 80))
    assert (out.width, out.height) == (48, 48)
    assert out.pixels.dtype == np.uint8
