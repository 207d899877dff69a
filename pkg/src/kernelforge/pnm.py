"""Binary PGM (P5) reading and writing, plus optional grayscale PNG via Pillow.

Samples are returned as floats in [0, 1]; writing quantizes with rounding
and clamps.  8-bit and 16-bit (big-endian) files round-trip bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PNMError(ValueError):
    pass


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First ``count`` header integers and the offset of the raster."""
    out: list[int] = []
    pos = 2
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise PNMError("malformed PGM header")
        out.append(int(data[start:pos]))
    if pos >= n or not data[pos:pos + 1].isspace():
        raise PNMError("malformed PGM header")
    return out, pos + 1


def read_pgm_raw(path) -> tuple[np.ndarray, int]:
    """Integer samples and max-value of a P5 file."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise PNMError("not a binary PGM (P5) file")
    (width, height, maxval), offset = _tokens(data, 3)
    if not 0 < maxval < 65536:
        raise PNMError(f"bad max value {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    size = width * height * dtype.itemsize
    raster = data[offset:offset + size]
    if len(raster) != size:
        raise PNMError("truncated PGM raster")
    img = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return img.astype(np.int64), maxval


def write_pgm_raw(path, samples: np.ndarray, maxval: int) -> None:
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise PNMError("PGM data must be 2D")
    if not 0 < maxval < 65536:
        raise PNMError(f"bad max value {maxval}")
    if samples.min(initial=0) < 0 or samples.max(initial=0) > maxval:
        raise PNMError("samples out of range")
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = samples.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + samples.astype(dtype).tobytes())


def read_pgm(path) -> np.ndarray:
    raw, maxval = read_pgm_raw(path)
    return raw / float(maxval)


def quantize(img: np.ndarray, maxval: int) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img, dtype=float) * maxval), 0, maxval).astype(np.int64)


def write_pgm(path, img: np.ndarray, bits: int = 8) -> None:
    if bits not in (8, 16):
        raise PNMError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    write_pgm_raw(path, quantize(img, maxval), maxval)


def read_image(path) -> np.ndarray:
    """PGM directly; anything else through Pillow as grayscale."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise PNMError("reading non-PGM images needs Pillow") from exc
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return arr / 65535.0
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def write_image(path, img: np.ndarray, bits: int = 8) -> None:
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        write_pgm(path, img, bits)
        return
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise PNMError("writing non-PGM images needs Pillow") from exc
    if bits == 16:
        Image.fromarray(quantize(img, 65535).astype(np.uint16)).save(path)
    else:
        Image.fromarray(quantize(img, 255).astype(np.uint8), mode="L").save(path)
