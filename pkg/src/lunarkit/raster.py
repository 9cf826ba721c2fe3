"""Binary payload decoding into numeric rasters, plus scaling and statistics.

The logical layout is always band_sequential: a flat buffer ordered band,
then line, then sample, whatever the source interleave was. Missing samples
are tracked in a separate boolean mask, never by sentinel substitution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllMissingError, PayloadTooShortError
from .pds4 import (
    BAND_SEQUENTIAL,
    LINE_INTERLEAVED,
    PIXEL_INTERLEAVED,
    ArrayDescriptor,
    expected_payload_bytes,
)

RAW_INTEGER = "raw_integer"
PHYSICAL_REAL = "physical_real"

HISTOGRAM_BINS = 65536


@dataclass(frozen=True)
class DecodeReport:
    """Non-fatal observations from a decode: trailing padding, non-finite floats."""

    extra_bytes: int = 0
    nonfinite_count: int = 0


@dataclass
class ImageRaster:
    """Decoded image: flat band_sequential samples plus an optional missing mask."""

    width: int
    height: int
    bands: int
    samples: np.ndarray          # 1-D, length width*height*bands
    value_domain: str = RAW_INTEGER
    missing: np.ndarray | None = None
    report: DecodeReport | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples).reshape(-1)
        expected = self.width * self.height * self.bands
        if self.samples.size != expected:
            raise ValueError(
                f"samples length {self.samples.size} != width*height*bands {expected}"
            )
        if self.missing is not None:
            self.missing = np.asarray(self.missing, dtype=bool).reshape(-1)
            if self.missing.size != expected:
                raise ValueError("missing mask must match the sample count")

    def as_array(self) -> np.ndarray:
        """Shape (bands, height, width) view of the flat buffer."""
        return self.samples.reshape(self.bands, self.height, self.width)

    def valid_samples(self) -> np.ndarray:
        if self.missing is None:
            return self.samples
        return self.samples[~self.missing]


# storage axes -> (band, line, sample) transposition per interleave
_CANONICAL_ORDER = {
    BAND_SEQUENTIAL: (0, 1, 2),    # stored (band, line, sample)
    LINE_INTERLEAVED: (1, 0, 2),   # stored (line, band, sample)
    PIXEL_INTERLEAVED: (2, 0, 1),  # stored (line, sample, band)
}


def decode(d: ArrayDescriptor, payload: bytes) -> ImageRaster:
    """Decode one payload according to its descriptor.

    Byte order comes from the element type, interleave is normalized to the
    band_sequential logical order, and nothing past
    offset_bytes + expected_payload_bytes is ever read. Longer payloads are
    allowed (record padding) and noted in the report; shorter ones raise.
    """
    expected = expected_payload_bytes(d)
    actual = len(payload) - d.offset_bytes
    if actual < expected:
        raise PayloadTooShortError(expected, max(actual, 0))

    dtype = np.dtype(d.element.numpy_dtype)
    count = expected // dtype.itemsize
    flat = np.frombuffer(payload, dtype=dtype, count=count, offset=d.offset_bytes)
    flat = flat.astype(dtype.newbyteorder("="))  # native order copy, values unchanged

    storage_shape = tuple(a.elements for a in d.axes)
    arr = flat.reshape(storage_shape)
    if len(d.axes) == 2:
        arr = arr.reshape((1,) + storage_shape)
    else:
        arr = arr.transpose(_CANONICAL_ORDER[d.interleave])

    nonfinite = 0
    if arr.dtype.kind == "f":
        nonfinite = int(np.count_nonzero(~np.isfinite(arr)))

    return ImageRaster(
        width=d.samples,
        height=d.lines,
        bands=d.bands,
        samples=np.ascontiguousarray(arr).reshape(-1),
        value_domain=RAW_INTEGER,
        missing=None,
        report=DecodeReport(extra_bytes=actual - expected, nonfinite_count=nonfinite),
    )


def apply_scaling(
    r: ImageRaster,
    scaling_factor: float,
    value_offset: float,
    missing_constant: float | None = None,
) -> ImageRaster:
    """Affine radiometric scaling: sample * factor + offset, in float64.

    missing_constant is compared against the incoming samples (the raw
    domain when scaling a freshly decoded raster); matches are masked, not
    replaced. Accepts already-scaled rasters so scalings compose.
    """
    raw = r.samples
    mask = r.missing.copy() if r.missing is not None else None
    if missing_constant is not None:
        # float64 compare is exact for every integer type in the element table
        hit = raw.astype(np.float64) == float(missing_constant)
        mask = hit if mask is None else (mask | hit)
    scaled = raw.astype(np.float64) * scaling_factor + value_offset
    return ImageRaster(
        width=r.width,
        height=r.height,
        bands=r.bands,
        samples=scaled,
        value_domain=PHYSICAL_REAL,
        missing=mask,
        report=r.report,
    )


class RasterStats:
    """Exact min/max/mean plus percentile queries over a fixed histogram.

    Percentiles use a 65536-bin histogram spanning [min, max]; any answer is
    within one bin width of the exact order statistic.
    """

    def __init__(self, minimum: float, maximum: float, mean: float, counts: np.ndarray, n: int):
        self.min = minimum
        self.max = maximum
        self.mean = mean
        self._cum = np.cumsum(counts)
        self._n = n

    def percentile(self, p: float) -> float:
        """Linear-interpolation order statistic, to one bin width.

        Matches sorted-array interpolation (h = p/100 * (n-1)): each of the
        two bracketing order statistics is located to its bin's left edge,
        then blended, so the answer is within one bin width of the exact
        sorted value.
        """
        if not 0.0 <= p <= 100.0:
            raise ValueError(f"percentile {p} outside [0, 100]")
        if self.max == self.min:
            return self.min
        h = p / 100.0 * (self._n - 1)
        k = math.floor(h)
        frac = h - k
        width = (self.max - self.min) / HISTOGRAM_BINS

        def edge_of_rank(rank: int) -> float:  # rank is 1-based
            idx = int(np.searchsorted(self._cum, rank, side="left"))
            return self.min + idx * width

        lo = edge_of_rank(k + 1)
        if frac == 0.0:
            return lo
        return lo + frac * (edge_of_rank(k + 2) - lo)


def stats(r: ImageRaster) -> RasterStats:
    """Statistics over non-missing samples; raises AllMissing when none remain."""
    values = r.valid_samples()
    if values.size == 0:
        raise AllMissingError("raster has no valid samples")
    values = values.astype(np.float64)
    mn = float(values.min())
    mx = float(values.max())
    mean = float(values.mean())
    if mx == mn:
        counts = np.zeros(HISTOGRAM_BINS, dtype=np.int64)
        counts[0] = values.size
    else:
        counts, _ = np.histogram(values, bins=HISTOGRAM_BINS, range=(mn, mx))
    return RasterStats(mn, mx, mean, counts, int(values.size))
