"""PDS4 XML label parsing: the subset needed to find and describe image arrays.

Matches on local element names only (namespace prefixes differ between
archives), walks the first File_Area_Observational, and turns each
Array_2D_Image / Array_3D_Image into a format-neutral ArrayDescriptor.
No schema or Schematron validation is attempted.

Also home to descriptor_from_odl, which derives the same descriptor from a
PDS3 IMAGE object so both label generations feed one decode path.
"""

from __future__ import annotations

import enum
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from . import odl
from .errors import (
    BadAxisNumberingError,
    MissingFileAreaError,
    NotFoundError,
    PayloadOverflowError,
    UnsupportedElementTypeError,
    UnsupportedSampleTypeError,
    XmlMalformedError,
)

INT64_MAX = 2**63 - 1

BAND_SEQUENTIAL = "band_sequential"
LINE_INTERLEAVED = "line_interleaved"
PIXEL_INTERLEAVED = "pixel_interleaved"


class ElementType(enum.Enum):
    """Binary element types this toolkit decodes (name = canonical string)."""

    uint8 = "uint8"
    int8 = "int8"
    uint16_be = "uint16_be"
    uint16_le = "uint16_le"
    int16_be = "int16_be"
    int16_le = "int16_le"
    uint32_be = "uint32_be"
    uint32_le = "uint32_le"
    int32_be = "int32_be"
    int32_le = "int32_le"
    float32_be = "float32_be"
    float32_le = "float32_le"
    float64_be = "float64_be"
    float64_le = "float64_le"

    @property
    def byte_width(self) -> int:
        return _WIDTHS[self]

    @property
    def numpy_dtype(self) -> str:
        return _NUMPY_DTYPES[self]

    @property
    def pds4_name(self) -> str:
        return _ELEMENT_TO_PDS4[self]


_WIDTHS = {
    ElementType.uint8: 1,
    ElementType.int8: 1,
    ElementType.uint16_be: 2,
    ElementType.uint16_le: 2,
    ElementType.int16_be: 2,
    ElementType.int16_le: 2,
    ElementType.uint32_be: 4,
    ElementType.uint32_le: 4,
    ElementType.int32_be: 4,
    ElementType.int32_le: 4,
    ElementType.float32_be: 4,
    ElementType.float32_le: 4,
    ElementType.float64_be: 8,
    ElementType.float64_le: 8,
}

_NUMPY_DTYPES = {
    ElementType.uint8: "u1",
    ElementType.int8: "i1",
    ElementType.uint16_be: ">u2",
    ElementType.uint16_le: "<u2",
    ElementType.int16_be: ">i2",
    ElementType.int16_le: "<i2",
    ElementType.uint32_be: ">u4",
    ElementType.uint32_le: "<u4",
    ElementType.int32_be: ">i4",
    ElementType.int32_le: "<i4",
    ElementType.float32_be: ">f4",
    ElementType.float32_le: "<f4",
    ElementType.float64_be: ">f8",
    ElementType.float64_le: "<f8",
}

# PDS4 data_type <-> ElementType is a bijection.
PDS4_TO_ELEMENT = {
    "UnsignedByte": ElementType.uint8,
    "SignedByte": ElementType.int8,
    "UnsignedMSB2": ElementType.uint16_be,
    "UnsignedLSB2": ElementType.uint16_le,
    "SignedMSB2": ElementType.int16_be,
    "SignedLSB2": ElementType.int16_le,
    "UnsignedMSB4": ElementType.uint32_be,
    "UnsignedLSB4": ElementType.uint32_le,
    "SignedMSB4": ElementType.int32_be,
    "SignedLSB4": ElementType.int32_le,
    "IEEE754MSBSingle": ElementType.float32_be,
    "IEEE754LSBSingle": ElementType.float32_le,
    "IEEE754MSBDouble": ElementType.float64_be,
    "IEEE754LSBDouble": ElementType.float64_le,
}
_ELEMENT_TO_PDS4 = {v: k for k, v in PDS4_TO_ELEMENT.items()}


@dataclass(frozen=True)
class AxisSpec:
    name: str
    elements: int
    sequence_number: int


@dataclass(frozen=True)
class ArrayDescriptor:
    """Format-neutral description of one binary image payload.

    axes are in storage order (ascending sequence_number, slowest first).
    interleave describes how a 3-axis payload lays out its bands; 2-axis
    arrays are band_sequential by definition.
    """

    axes: tuple[AxisSpec, ...]
    element: ElementType
    offset_bytes: int = 0
    scaling_factor: float = 1.0
    value_offset: float = 0.0
    missing_constant: float | None = None
    interleave: str = BAND_SEQUENTIAL

    def __post_init__(self):
        if len(self.axes) not in (2, 3):
            raise BadAxisNumberingError(f"need 2 or 3 axes, got {len(self.axes)}")
        if any(a.elements < 1 for a in self.axes):
            raise BadAxisNumberingError("every axis needs at least one element")
        if self.offset_bytes < 0:
            raise ValueError("offset_bytes must be non-negative")

    def _axis(self, role: str) -> AxisSpec:
        for a in self.axes:
            if a.name.lower() == role:
                return a
        raise BadAxisNumberingError(f"no axis named {role!r}")

    @property
    def lines(self) -> int:
        return self._axis("line").elements

    @property
    def samples(self) -> int:
        return self._axis("sample").elements

    @property
    def bands(self) -> int:
        if len(self.axes) == 2:
            return 1
        return self._axis("band").elements


def expected_payload_bytes(d: ArrayDescriptor) -> int:
    """Product of axis element counts times element byte width."""
    total = d.element.byte_width
    for a in d.axes:
        total *= a.elements
        if total > INT64_MAX:
            raise PayloadOverflowError(f"payload size exceeds {INT64_MAX} bytes")
    return total


@dataclass(frozen=True)
class Pds4Product:
    product_class: str
    logical_identifier: str
    file_name: str
    arrays: tuple[ArrayDescriptor, ...]
    title: str | None = None
    start_time: str | None = None
    instrument_name: str | None = None


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rpartition("}")[2]


def _iter_local(elem, name: str):
    for e in elem.iter():
        if _local(e.tag) == name:
            yield e


def _first_text(elem, name: str) -> str | None:
    for e in _iter_local(elem, name):
        return e.text.strip() if e.text else ""
    return None


def _interleave_from_axes(axes: tuple[AxisSpec, ...]) -> str:
    if len(axes) == 2:
        return BAND_SEQUENTIAL
    names = [a.name.lower() for a in axes]
    if sorted(names) != ["band", "line", "sample"]:
        raise BadAxisNumberingError(
            f"3-axis array must name its axes Band/Line/Sample, got {names}"
        )
    band_pos = names.index("band")
    return (BAND_SEQUENTIAL, LINE_INTERLEAVED, PIXEL_INTERLEAVED)[band_pos]


def _parse_axes(array_elem) -> tuple[AxisSpec, ...]:
    axes = []
    for ax in _iter_local(array_elem, "Axis_Array"):
        name = _first_text(ax, "axis_name")
        elements = _first_text(ax, "elements")
        seq = _first_text(ax, "sequence_number")
        if name is None or elements is None or seq is None:
            raise BadAxisNumberingError("Axis_Array needs axis_name, elements, sequence_number")
        try:
            axes.append(AxisSpec(name, int(elements), int(seq)))
        except ValueError as exc:
            raise BadAxisNumberingError(f"bad axis numbers: {exc}") from exc
    axes.sort(key=lambda a: a.sequence_number)
    if [a.sequence_number for a in axes] != list(range(1, len(axes) + 1)):
        raise BadAxisNumberingError(
            f"sequence_numbers must be 1..{len(axes)} exactly once, got "
            f"{[a.sequence_number for a in axes]}"
        )
    return tuple(axes)


def _parse_array(array_elem) -> ArrayDescriptor:
    axes = _parse_axes(array_elem)
    data_type = _first_text(array_elem, "data_type")
    if data_type not in PDS4_TO_ELEMENT:
        raise UnsupportedElementTypeError(f"data_type {data_type!r} is not supported")
    offset = _first_text(array_elem, "offset")
    scaling = _first_text(array_elem, "scaling_factor")
    value_off = _first_text(array_elem, "value_offset")
    missing = _first_text(array_elem, "missing_constant")
    return ArrayDescriptor(
        axes=axes,
        element=PDS4_TO_ELEMENT[data_type],
        offset_bytes=int(offset) if offset else 0,
        scaling_factor=float(scaling) if scaling else 1.0,
        value_offset=float(value_off) if value_off else 0.0,
        missing_constant=float(missing) if missing else None,
        interleave=_interleave_from_axes(axes),
    )


def parse_pds4(xml_text: str) -> Pds4Product:
    """Extract product class, identifier, file name, and image arrays.

    Unknown elements are skipped; axes come out sorted by sequence_number
    regardless of document order.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise XmlMalformedError(f"not well-formed XML: {exc}") from exc

    file_area = next(_iter_local(root, "File_Area_Observational"), None)
    if file_area is None:
        raise MissingFileAreaError("label has no File_Area_Observational")
    file_name = _first_text(file_area, "file_name")
    if not file_name:
        raise MissingFileAreaError("File_Area_Observational has no file_name")

    arrays = []
    for elem in file_area.iter():
        if _local(elem.tag) in ("Array_2D_Image", "Array_3D_Image"):
            arrays.append(_parse_array(elem))

    instrument = None
    for comp in _iter_local(root, "Observing_System_Component"):
        if (_first_text(comp, "type") or "").lower() == "instrument":
            instrument = _first_text(comp, "name")
            break

    return Pds4Product(
        product_class=_local(root.tag),
        logical_identifier=_first_text(root, "logical_identifier") or "",
        file_name=file_name,
        arrays=tuple(arrays),
        title=_first_text(root, "title"),
        start_time=_first_text(root, "start_date_time"),
        instrument_name=instrument,
    )


def product_to_json(p: Pds4Product) -> dict:
    """Stable JSON rendering used by the CLI inspect command."""
    return {
        "product_class": p.product_class,
        "lid": p.logical_identifier,
        "file": p.file_name,
        "arrays": [
            {
                "axes": [
                    {"name": a.name, "elements": a.elements, "sequence_number": a.sequence_number}
                    for a in d.axes
                ],
                "element_type": d.element.value,
                "offset_bytes": d.offset_bytes,
                "scaling_factor": d.scaling_factor,
                "value_offset": d.value_offset,
                "missing_constant": d.missing_constant,
                "interleave": d.interleave,
            }
            for d in p.arrays
        ],
        "title": p.title,
        "start_time": p.start_time,
        "instrument": p.instrument_name,
    }


# PDS3 (SAMPLE_BITS, SAMPLE_TYPE) -> ElementType. Bare INTEGER/UNSIGNED_INTEGER
# at multi-byte widths default to MSB, the PDS3 fixed-binary convention.
_SAMPLE_TYPE_TABLE: dict[tuple[int, str], ElementType] = {}
for _bits, _names, _et in [
    (8, ("UNSIGNED_INTEGER", "MSB_UNSIGNED_INTEGER", "LSB_UNSIGNED_INTEGER"), ElementType.uint8),
    (8, ("INTEGER", "MSB_INTEGER", "LSB_INTEGER"), ElementType.int8),
    (16, ("UNSIGNED_INTEGER", "MSB_UNSIGNED_INTEGER"), ElementType.uint16_be),
    (16, ("LSB_UNSIGNED_INTEGER",), ElementType.uint16_le),
    (16, ("INTEGER", "MSB_INTEGER"), ElementType.int16_be),
    (16, ("LSB_INTEGER",), ElementType.int16_le),
    (32, ("UNSIGNED_INTEGER", "MSB_UNSIGNED_INTEGER"), ElementType.uint32_be),
    (32, ("LSB_UNSIGNED_INTEGER",), ElementType.uint32_le),
    (32, ("INTEGER", "MSB_INTEGER"), ElementType.int32_be),
    (32, ("LSB_INTEGER",), ElementType.int32_le),
    (32, ("IEEE_REAL",), ElementType.float32_be),
    (32, ("PC_REAL",), ElementType.float32_le),
    (64, ("IEEE_REAL",), ElementType.float64_be),
    (64, ("PC_REAL",), ElementType.float64_le),
]:
    for _n in _names:
        _SAMPLE_TYPE_TABLE[(_bits, _n)] = _et

_BAND_STORAGE = {
    "BAND_SEQUENTIAL": BAND_SEQUENTIAL,
    "LINE_INTERLEAVED": LINE_INTERLEAVED,
    "SAMPLE_INTERLEAVED": PIXEL_INTERLEAVED,
}


def _require_int(image: odl.OdlLabel, keyword: str) -> int:
    try:
        value = odl.lookup(image, [keyword])
    except NotFoundError:
        raise NotFoundError(f"IMAGE object has no {keyword}") from None
    if value.kind != "integer":
        raise NotFoundError(f"IMAGE {keyword} is not an integer")
    return value.value


def _optional_number(label: odl.OdlLabel, path: list[str]) -> float | None:
    try:
        value = odl.lookup(label, path)
    except NotFoundError:
        return None
    if value.kind in ("integer", "real"):
        return float(value.value)
    return None


def descriptor_from_odl(
    label: odl.OdlLabel, record_bytes: int | None = None
) -> tuple[ArrayDescriptor, odl.PointerInfo]:
    """Build an ArrayDescriptor (plus payload location) from a PDS3 label.

    Needs an IMAGE object with LINES, LINE_SAMPLES, SAMPLE_BITS and
    SAMPLE_TYPE. BANDS/BAND_STORAGE_TYPE make it a 3-axis descriptor. When
    record_bytes is not given, the label's own RECORD_BYTES is used to
    resolve record-offset pointers.
    """
    image = odl.find_block(label, "IMAGE", "OBJECT")
    lines = _require_int(image, "LINES")
    line_samples = _require_int(image, "LINE_SAMPLES")
    sample_bits = _require_int(image, "SAMPLE_BITS")
    try:
        sample_type = odl.lookup(image, ["SAMPLE_TYPE"])
    except NotFoundError:
        raise NotFoundError("IMAGE object has no SAMPLE_TYPE") from None
    type_name = str(sample_type.value).upper()
    element = _SAMPLE_TYPE_TABLE.get((sample_bits, type_name))
    if element is None:
        raise UnsupportedSampleTypeError(
            f"SAMPLE_BITS={sample_bits} SAMPLE_TYPE={type_name} is not supported"
        )

    bands = None
    try:
        bands = _require_int(image, "BANDS")
    except NotFoundError:
        pass

    interleave = BAND_SEQUENTIAL
    if bands is not None:
        try:
            storage = str(odl.lookup(image, ["BAND_STORAGE_TYPE"]).value).upper()
        except NotFoundError:
            storage = "BAND_SEQUENTIAL"
        if storage not in _BAND_STORAGE:
            raise UnsupportedSampleTypeError(f"BAND_STORAGE_TYPE {storage!r} is not supported")
        interleave = _BAND_STORAGE[storage]

    line_axis = ("Line", lines)
    sample_axis = ("Sample", line_samples)
    if bands is None:
        order = [line_axis, sample_axis]
    else:
        band_axis = ("Band", bands)
        if interleave == BAND_SEQUENTIAL:
            order = [band_axis, line_axis, sample_axis]
        elif interleave == LINE_INTERLEAVED:
            order = [line_axis, band_axis, sample_axis]
        else:
            order = [line_axis, sample_axis, band_axis]
    axes = tuple(
        AxisSpec(name, count, seq) for seq, (name, count) in enumerate(order, start=1)
    )

    if record_bytes is None:
        rb = _optional_number(label, ["RECORD_BYTES"])
        record_bytes = int(rb) if rb is not None else None
    try:
        pointer = odl.pointer_target(label, "IMAGE", record_bytes)
    except NotFoundError:
        pointer = odl.PointerInfo(None, 0, "bytes")

    scaling = _optional_number(image, ["SCALING_FACTOR"])
    value_off = _optional_number(image, ["OFFSET"])
    descriptor = ArrayDescriptor(
        axes=axes,
        element=element,
        offset_bytes=pointer.offset,
        scaling_factor=1.0 if scaling is None else scaling,
        value_offset=0.0 if value_off is None else value_off,
        missing_constant=_optional_number(image, ["MISSING_CONSTANT"]),
        interleave=interleave,
    )
    return descriptor, pointer
