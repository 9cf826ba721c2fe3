"""Stretch-to-depth quantization and deterministic PNG encoding.

The encoder is self-contained on purpose: output must be byte-identical
across runs and machines, so the chunk layout, filter choice (none) and
zlib settings are pinned here rather than delegated to an imaging library.
Grayscale and truecolor, 8- and 16-bit, no alpha, no interlacing; the only
ancillary chunk is an optional tEXt "Source" carrying the product id.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import StretchRangeError, UnsupportedBandsError
from .raster import RAW_INTEGER, ImageRaster, stats

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6  # pinned for byte-identical output

METHOD_NONE = "none"
METHOD_MINMAX = "minmax"
METHOD_PERCENTILE = "percentile"


@dataclass(frozen=True)
class StretchSpec:
    method: str = METHOD_PERCENTILE
    p_lo: float = 0.5
    p_hi: float = 99.5
    depth: int = 8

    def __post_init__(self):
        if self.method not in (METHOD_NONE, METHOD_MINMAX, METHOD_PERCENTILE):
            raise ValueError(f"unknown stretch method {self.method!r}")
        if self.depth not in (8, 16):
            raise ValueError("target depth must be 8 or 16")
        if self.method == METHOD_PERCENTILE and not 0.0 <= self.p_lo < self.p_hi <= 100.0:
            raise ValueError(f"need 0 <= p_lo < p_hi <= 100, got {self.p_lo}, {self.p_hi}")


def stretch(r: ImageRaster, s: StretchSpec) -> ImageRaster:
    """Linearly map [lo, hi] onto [0, 2**depth - 1] and quantize.

    lo/hi come from min/max or histogram percentiles; values outside clamp;
    missing samples map to 0; a degenerate range (hi == lo) maps every valid
    sample to 0. Rounding is half away from zero so exports are reproducible
    bit for bit.
    """
    maxval = (1 << s.depth) - 1
    dtype = np.uint8 if s.depth == 8 else np.uint16
    values = r.samples.astype(np.float64)

    if s.method == METHOD_NONE:
        st = stats(r)
        if st.min < 0 or st.max > maxval:
            raise StretchRangeError(
                f"samples [{st.min}, {st.max}] exceed {s.depth}-bit range with method 'none'"
            )
        quant = np.floor(values + 0.5)
    else:
        st = stats(r)
        if s.method == METHOD_MINMAX:
            lo, hi = st.min, st.max
        else:
            lo, hi = st.percentile(s.p_lo), st.percentile(s.p_hi)
        if hi <= lo:
            quant = np.zeros_like(values)
        else:
            clipped = np.clip(values, lo, hi)
            quant = np.floor((clipped - lo) / (hi - lo) * maxval + 0.5)

    quant = np.clip(quant, 0, maxval)
    if r.missing is not None:
        quant[r.missing] = 0
    return ImageRaster(
        width=r.width,
        height=r.height,
        bands=r.bands,
        samples=quant.astype(dtype),
        value_domain=RAW_INTEGER,
        missing=None,
        report=r.report,
    )


def _chunk(tag: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + tag
        + data
        + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
    )


def png_bytes(r: ImageRaster, source_id: str | None = None) -> bytes:
    """Encode a quantized raster (uint8/uint16 samples, 1 or 3 bands) as PNG."""
    if r.bands not in (1, 3):
        raise UnsupportedBandsError(f"PNG export needs 1 or 3 bands, got {r.bands}")
    if r.samples.dtype == np.uint8:
        depth = 8
    elif r.samples.dtype == np.uint16:
        depth = 16
    else:
        raise TypeError(f"samples must be uint8 or uint16, got {r.samples.dtype}")

    color_type = 0 if r.bands == 1 else 2
    ihdr = struct.pack(">IIBBBBB", r.width, r.height, depth, color_type, 0, 0, 0)

    # (band, line, sample) -> per-pixel interleave, big-endian for 16-bit
    pixels = r.as_array().transpose(1, 2, 0)
    if depth == 16:
        row_bytes = np.ascontiguousarray(pixels.astype(">u2")).tobytes()
    else:
        row_bytes = np.ascontiguousarray(pixels).tobytes()
    stride = r.width * r.bands * (depth // 8)
    raw = bytearray()
    for y in range(r.height):
        raw.append(0)  # filter type None on every scanline, pinned
        raw += row_bytes[y * stride : (y + 1) * stride]

    out = bytearray(_PNG_SIGNATURE)
    out += _chunk(b"IHDR", ihdr)
    if source_id is not None:
        out += _chunk(b"tEXt", b"Source\x00" + source_id.encode("latin-1"))
    out += _chunk(b"IDAT", zlib.compress(bytes(raw), _ZLIB_LEVEL))
    out += _chunk(b"IEND", b"")
    return bytes(out)


def write_png(r: ImageRaster, path_or_stream, source_id: str | None = None) -> int:
    """Write the PNG encoding to a path or binary stream; returns byte count."""
    data = png_bytes(r, source_id)
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(data)
    else:
        with open(path_or_stream, "wb") as fh:
            fh.write(data)
    return len(data)
