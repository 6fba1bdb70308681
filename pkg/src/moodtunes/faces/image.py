"""Grayscale images: decoding, luma conversion, integral images, crop+resize.

Pixels are stored as a (height, width) uint8 array in row-major order.
Luma and resampling use exact integer / half-up rounding so results are
reproducible bit-for-bit across platforms.
"""

import io
import re
from dataclasses import dataclass, field

import numpy as np


class ImageFormatError(ValueError):
    """Input bytes are not a decodable image."""


class BoxError(ValueError):
    """A crop box is degenerate or outside the image."""


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 2 or p.shape != (self.height, self.width):
            raise ImageFormatError(
                f"pixel block {p.shape} does not match {self.width}x{self.height}"
            )
        if p.dtype != np.uint8:
            raise ImageFormatError(f"pixels must be uint8, got {p.dtype}")

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)


def to_grayscale(rgb):
    """Luma conversion 0.299R + 0.587G + 0.114B, rounded half-up.

    Integer arithmetic: (299R + 587G + 114B + 500) // 1000 is exact, so
    no platform-dependent float rounding can flip a .5 case.
    """
    arr = np.asarray(rgb)
    if arr.ndim == 2:
        return GrayImage.from_array(arr.astype(np.uint8))
    if arr.ndim == 3 and arr.shape[2] == 1:
        return GrayImage.from_array(arr[:, :, 0].astype(np.uint8))
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageFormatError(f"expected RGB (h, w, 3) or grayscale, got shape {arr.shape}")
    a = arr.astype(np.int64)
    luma = (299 * a[:, :, 0] + 587 * a[:, :, 1] + 114 * a[:, :, 2] + 500) // 1000
    return GrayImage.from_array(luma.astype(np.uint8))


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _pgm_tokens(data, count):
    """First `count` whitespace/comment-delimited header tokens after P5."""
    pos = 2  # past magic
    out = []
    for _ in range(count):
        m = _PGM_TOKEN.match(data, pos)
        if not m:
            raise ImageFormatError("PGM header ends before width/height/maxval")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def decode_pgm(data):
    """Binary PGM (P5): magic, width, height, maxval, one whitespace, raster."""
    if data[:2] != b"P5":
        raise ImageFormatError("not a P5 PGM (bad magic)")
    (w_tok, h_tok, max_tok), pos = _pgm_tokens(data, 3)
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise ImageFormatError("PGM header fields must be decimal integers") from None
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"PGM size {width}x{height} not positive")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"PGM maxval {maxval} unsupported (need 1..255)")
    raster = data[pos + 1 : pos + 1 + width * height]
    if len(raster) < width * height:
        raise ImageFormatError(
            f"PGM raster truncated: expected {width * height} bytes, got {len(raster)}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(width=width, height=height, pixels=pixels.copy())


def decode_image(data):
    """PNG, JPEG, or binary PGM bytes -> GrayImage (standard codecs via Pillow)."""
    if data[:2] == b"P5":
        return decode_pgm(data)
    from PIL import Image, UnidentifiedImageError

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"undecodable image bytes: {exc}") from exc
    except OSError as exc:
        raise ImageFormatError(f"broken image stream: {exc}") from exc
    if img.mode == "L":
        return GrayImage.from_array(np.asarray(img))
    return to_grayscale(np.asarray(img.convert("RGB")))


def integral_image(gray):
    """Inclusive integrals: ii[y, x] = sum of pixels in (0,0)..(x,y).

    Returns (ii, squared_ii) as int64, so every rectangle sum is exact.
    """
    p = gray.pixels.astype(np.int64)
    ii = p.cumsum(axis=0).cumsum(axis=1)
    sq = (p * p).cumsum(axis=0).cumsum(axis=1)
    return ii, sq


def pad_integral(ii):
    """Zero-bordered copy: P[y, x] = sum of pixels strictly above/left of (x, y)."""
    out = np.zeros((ii.shape[0] + 1, ii.shape[1] + 1), dtype=ii.dtype)
    out[1:, 1:] = ii
    return out


def rect_sum(padded, x, y, w, h):
    """Sum over the w x h rectangle at (x, y), from a pad_integral array."""
    return (
        padded[y + h, x + w] - padded[y, x + w] - padded[y + h, x] + padded[y, x]
    )


def crop_resize(gray, box, out=48):
    """Crop the box and bilinearly resample to out x out.

    box is (x, y, w, h) or any object with those attributes.  Sample
    positions map pixel centers: src = (dst + 0.5) * (size/out) - 0.5,
    clamped to the box, so a box already at the target size copies
    through unchanged.
    """
    if hasattr(box, "x"):
        x, y, w, h = box.x, box.y, box.w, box.h
    else:
        x, y, w, h = box
    if w <= 0 or h <= 0:
        raise BoxError(f"degenerate box {w}x{h}")
    if x < 0 or y < 0 or x + w > gray.width or y + h > gray.height:
        raise BoxError(
            f"box ({x},{y},{w},{h}) outside {gray.width}x{gray.height} image"
        )
    region = gray.pixels[y : y + h, x : x + w].astype(np.float64)
    sx = np.clip((np.arange(out) + 0.5) * (w / out) - 0.5, 0.0, w - 1.0)
    sy = np.clip((np.arange(out) + 0.5) * (h / out) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = region[y0][:, x0] * (1 - fx) + region[y0][:, x1] * fx
    bot = region[y1][:, x0] * (1 - fx) + region[y1][:, x1] * fx
    blended = top * (1 - fy[:, None]) + bot * fy[:, None]
    pixels = np.floor(blended + 0.5).clip(0, 255).astype(np.uint8)
    return GrayImage(width=out, height=out, pixels=pixels)
