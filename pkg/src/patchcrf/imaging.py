"""Image decoding, grayscale conversion and bilinear resizing.

Images are plain 2-D ``float64`` arrays (rows x cols) with luminance in
``[0, 1]``. Netpbm (PGM/PPM, ASCII and binary) is always available; PNG
decoding is used when Pillow is importable.
"""

from __future__ import annotations

import io
import os
from typing import List, Tuple

import numpy as np

from .exceptions import (
    MalformedHeader,
    TruncatedPayload,
    UnsupportedFormat,
    ZeroTargetDimension,
)

LUMA = np.array([0.299, 0.587, 0.114])
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
IMAGE_EXTENSIONS = (".pgm", ".ppm", ".pnm", ".png")

try:
    from PIL import Image as _PILImage
except ImportError:  # pragma: no cover - depends on environment
    _PILImage = None


def png_supported() -> bool:
    return _PILImage is not None


def capabilities() -> dict:
    return {
        "formats": ["pgm-p2", "pgm-p5", "ppm-p3", "ppm-p6"] + (["png"] if png_supported() else []),
        "png": png_supported(),
    }


def _read_header(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """Read ``count`` whitespace-separated header tokens after the magic.

    Returns the tokens and the offset just past the last token.
    """
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise MalformedHeader("unexpected end of data inside the header")
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _header_ints(tokens: List[bytes]) -> List[int]:
    values = []
    for tok in tokens:
        try:
            values.append(int(tok))
        except ValueError:
            raise MalformedHeader(f"non-numeric header field {tok!r}") from None
    return values


def _decode_netpbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = 1 if magic in (b"P2", b"P5") else 3
    tokens, pos = _read_header(data, 3)
    width, height, maxval = _header_ints(tokens)
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedHeader(f"maxval {maxval} outside 1..65535")
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise MalformedHeader("missing whitespace after maxval")
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = data[pos:pos + count * dtype.itemsize]
        if len(payload) < count * dtype.itemsize:
            raise TruncatedPayload(
                f"expected {count * dtype.itemsize} raster bytes, found {len(payload)}")
        raw = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        fields = data[pos:].split()
        if len(fields) < count:
            raise TruncatedPayload(f"expected {count} samples, found {len(fields)}")
        try:
            raw = np.array([int(f) for f in fields[:count]], dtype=np.float64)
        except ValueError:
            raise MalformedHeader("non-numeric sample in ASCII raster") from None

    if raw.max(initial=0) > maxval:
        raise MalformedHeader(f"sample exceeds maxval {maxval}")
    raw /= maxval
    if channels == 3:
        return raw.reshape(height, width, 3) @ LUMA
    return raw.reshape(height, width)


def _decode_png(data: bytes) -> np.ndarray:
    if _PILImage is None:
        raise UnsupportedFormat("PNG input requires Pillow (pip install Pillow)")
    try:
        im = _PILImage.open(io.BytesIO(data))
        im.load()
    except Exception as exc:
        raise TruncatedPayload(f"cannot decode PNG: {exc}") from None
    if im.mode in ("L", "LA"):
        return np.asarray(im.getchannel(0), dtype=np.float64) / 255.0
    if im.mode in ("RGB", "RGBA", "P"):
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
        return rgb @ LUMA
    raise UnsupportedFormat(f"unsupported PNG mode {im.mode}")


def decode_image(data: bytes) -> np.ndarray:
    """Decode raw file bytes into a grayscale image in ``[0, 1]``."""
    data = bytes(data)
    if data[:2] in (b"P2", b"P3", b"P5", b"P6"):
        img = _decode_netpbm(data)
    elif data[:8] == PNG_SIGNATURE:
        img = _decode_png(data)
    else:
        raise UnsupportedFormat(f"unrecognised image signature {data[:2]!r}")
    return np.clip(img, 0.0, 1.0)


def read_image(path) -> np.ndarray:
    """Read and decode ``path``; decode errors name the offending file."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return decode_image(data)
    except (UnsupportedFormat, MalformedHeader, TruncatedPayload) as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def encode_pgm(image: np.ndarray, maxval: int = 255) -> bytes:
    """Encode a ``[0, 1]`` image as binary PGM (P5)."""
    img = np.asarray(image, dtype=np.float64)
    height, width = img.shape
    samples = np.rint(np.clip(img, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + samples.astype(dtype).tobytes()


def write_pgm(path, image: np.ndarray, maxval: int = 255) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image, maxval))


def resize_bilinear(image: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with sample points at pixel centres and edge clamping."""
    img = np.asarray(image, dtype=np.float64)
    if out_w < 1 or out_h < 1:
        raise ZeroTargetDimension(f"target size must be positive, got {out_w}x{out_h}")
    if img.ndim != 2 or img.size == 0:
        raise ValueError("resize_bilinear expects a non-empty 2-D image")
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()

    def axis_weights(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, wy = axis_weights(in_h, out_h)
    x0, x1, wx = axis_weights(in_w, out_w)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    out = top * (1 - wy)[:, None] + bottom * wy[:, None]
    return np.clip(out, img.min(), img.max())
