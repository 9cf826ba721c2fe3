"""PDS4 label subset parsing and descriptor construction from both label kinds."""

import pytest

from lunarkit.errors import (
    BadAxisNumberingError,
    MissingFileAreaError,
    NotFoundError,
    PayloadOverflowError,
    UnsupportedElementTypeError,
    UnsupportedSampleTypeError,
    XmlMalformedError,
)
from lunarkit.odl import parse_odl
from lunarkit.pds4 import (
    PDS4_TO_ELEMENT,
    ArrayDescriptor,
    AxisSpec,
    ElementType,
    descriptor_from_odl,
    expected_payload_bytes,
    parse_pds4,
)


def _label(
    arrays: str,
    file_name: str = "img.dat",
    lid: str = "urn:nasa:pds:x:y:z",
    ns: str = 'xmlns="http://pds.nasa.gov/pds4/pds/v1"',
) -> str:
    return f"""<?xml version="1.0"?>
<Product_Observational {ns}>
  <Identification_Area>
    <logical_identifier>{lid}</logical_identifier>
    <title>a fixture</title>
  </Identification_Area>
  <File_Area_Observational>
    <File><file_name>{file_name}</file_name></File>
    {arrays}
  </File_Area_Observational>
</Product_Observational>
"""


def _array(
    lines=1,
    samples=1,
    data_type="UnsignedByte",
    offset=0,
    line_seq=1,
    sample_seq=2,
    extra="",
    tag="Array_2D_Image",
):
    return f"""<{tag}>
      <offset unit="byte">{offset}</offset>
      <Element_Array><data_type>{data_type}</data_type>{extra}</Element_Array>
      <Axis_Array>
        <axis_name>Line</axis_name><elements>{lines}</elements>
        <sequence_number>{line_seq}</sequence_number>
      </Axis_Array>
      <Axis_Array>
        <axis_name>Sample</axis_name><elements>{samples}</elements>
        <sequence_number>{sample_seq}</sequence_number>
      </Axis_Array>
    </{tag}>"""


class TestParsePds4:
    def test_minimal_one_by_one(self):
        product = parse_pds4(_label(_array()))
        assert product.product_class == "Product_Observational"
        assert product.logical_identifier == "urn:nasa:pds:x:y:z"
        assert product.file_name == "img.dat"
        assert len(product.arrays) == 1
        d = product.arrays[0]
        assert d.element == ElementType.uint8
        assert (d.lines, d.samples, d.bands) == (1, 1, 1)
        assert d.offset_bytes == 0

    def test_128_square_msb2_payload_bytes(self):
        product = parse_pds4(_label(_array(lines=128, samples=128, data_type="UnsignedMSB2")))
        assert expected_payload_bytes(product.arrays[0]) == 32768

    def test_unsupported_element_type(self):
        with pytest.raises(UnsupportedElementTypeError):
            parse_pds4(_label(_array(data_type="UnsignedMSB8")))

    def test_malformed_xml(self):
        with pytest.raises(XmlMalformedError):
            parse_pds4("<Product_Observational><unclosed>")

    def test_missing_file_area(self):
        xml = "<Product_Observational><Identification_Area/></Product_Observational>"
        with pytest.raises(MissingFileAreaError):
            parse_pds4(xml)

    def test_axes_sorted_by_sequence_number(self):
        # Sample written first in document order but numbered 2
        product = parse_pds4(_label(_array(lines=3, samples=7, line_seq=1, sample_seq=2)))
        d = product.arrays[0]
        assert [a.name for a in d.axes] == ["Line", "Sample"]
        shuffled = _array(lines=3, samples=7, line_seq=2, sample_seq=1)
        d2 = parse_pds4(_label(shuffled)).arrays[0]
        assert [a.name for a in d2.axes] == ["Sample", "Line"]

    def test_bad_axis_numbering(self):
        with pytest.raises(BadAxisNumberingError):
            parse_pds4(_label(_array(line_seq=1, sample_seq=3)))
        with pytest.raises(BadAxisNumberingError):
            parse_pds4(_label(_array(line_seq=1, sample_seq=1)))

    def test_scaling_and_offset_read(self):
        extra = "<scaling_factor>0.5</scaling_factor><value_offset>10</value_offset>"
        d = parse_pds4(_label(_array(extra=extra))).arrays[0]
        assert (d.scaling_factor, d.value_offset) == (0.5, 10.0)

    def test_scaling_defaults(self):
        d = parse_pds4(_label(_array())).arrays[0]
        assert (d.scaling_factor, d.value_offset) == (1.0, 0.0)

    def test_namespace_prefixes_ignored(self):
        xml = _label(_array(), ns='xmlns="urn:whatever:else"')
        assert parse_pds4(xml).file_name == "img.dat"

    def test_unknown_elements_skipped(self):
        arrays = "<Mystery_Thing><foo>1</foo></Mystery_Thing>" + _array()
        assert len(parse_pds4(_label(arrays)).arrays) == 1

    def test_instrument_name_extracted(self, tmp_path):
        from conftest import write_pds4_product

        label, _ = write_pds4_product(tmp_path, "x", instrument="PCAM-L")
        product = parse_pds4(label.read_text())
        assert product.instrument_name == "PCAM-L"
        assert product.start_time == "2019-01-03T10:25:31Z"

    def test_three_axis_interleaves(self):
        def axis(name, n, seq):
            return (
                f"<Axis_Array><axis_name>{name}</axis_name><elements>{n}</elements>"
                f"<sequence_number>{seq}</sequence_number></Axis_Array>"
            )

        for order, interleave in [
            (("Band", "Line", "Sample"), "band_sequential"),
            (("Line", "Band", "Sample"), "line_interleaved"),
            (("Line", "Sample", "Band"), "pixel_interleaved"),
        ]:
            counts = dict(Band=3, Line=4, Sample=5)
            axes = "".join(axis(n, counts[n], i + 1) for i, n in enumerate(order))
            arr = (
                "<Array_3D_Image><offset unit=\"byte\">0</offset>"
                "<Element_Array><data_type>UnsignedByte</data_type></Element_Array>"
                f"{axes}</Array_3D_Image>"
            )
            d = parse_pds4(_label(arr)).arrays[0]
            assert d.interleave == interleave
            assert (d.bands, d.lines, d.samples) == (3, 4, 5)


class TestExpectedPayloadBytes:
    def test_one_byte(self):
        d = ArrayDescriptor((AxisSpec("Line", 1, 1), AxisSpec("Sample", 1, 2)), ElementType.uint8)
        assert expected_payload_bytes(d) == 1

    def test_two_by_three_uint16(self):
        d = ArrayDescriptor(
            (AxisSpec("Line", 2, 1), AxisSpec("Sample", 3, 2)), ElementType.uint16_be
        )
        assert expected_payload_bytes(d) == 12

    def test_three_axis(self):
        d = ArrayDescriptor(
            (AxisSpec("Band", 3, 1), AxisSpec("Line", 100, 2), AxisSpec("Sample", 100, 3)),
            ElementType.uint8,
        )
        assert expected_payload_bytes(d) == 30000

    def test_axis_permutation_invariant(self):
        a = ArrayDescriptor(
            (AxisSpec("Band", 3, 1), AxisSpec("Line", 7, 2), AxisSpec("Sample", 11, 3)),
            ElementType.int32_le,
        )
        b = ArrayDescriptor(
            (AxisSpec("Line", 7, 1), AxisSpec("Sample", 11, 2), AxisSpec("Band", 3, 3)),
            ElementType.int32_le,
            interleave="pixel_interleaved",
        )
        assert expected_payload_bytes(a) == expected_payload_bytes(b)

    def test_overflow(self):
        d = ArrayDescriptor(
            (AxisSpec("Line", 2**31, 1), AxisSpec("Sample", 2**31, 2)),
            ElementType.float64_be,
        )
        with pytest.raises(PayloadOverflowError):
            expected_payload_bytes(d)


class TestElementTypeTable:
    def test_bijection(self):
        assert len(PDS4_TO_ELEMENT) == 14
        seen = set()
        for pds4_name, element in PDS4_TO_ELEMENT.items():
            assert element.pds4_name == pds4_name
            seen.add(element)
        assert seen == set(ElementType)

    def test_byte_widths(self):
        assert ElementType.uint8.byte_width == 1
        assert ElementType.int16_le.byte_width == 2
        assert ElementType.float32_be.byte_width == 4
        assert ElementType.float64_le.byte_width == 8


ODL_IMAGE = """RECORD_BYTES = 100
^IMAGE = 2
OBJECT = IMAGE
  LINES = {lines}
  LINE_SAMPLES = {samples}
  SAMPLE_BITS = {bits}
  SAMPLE_TYPE = {stype}
{extra}END_OBJECT = IMAGE
END
"""


class TestDescriptorFromOdl:
    def test_basic_uint8(self):
        label = parse_odl(
            "OBJECT = IMAGE\nLINES = 2\nLINE_SAMPLES = 3\nSAMPLE_BITS = 8\n"
            "SAMPLE_TYPE = UNSIGNED_INTEGER\nEND_OBJECT = IMAGE\nEND"
        )
        d, pointer = descriptor_from_odl(label)
        assert d.element == ElementType.uint8
        assert (d.lines, d.samples, d.bands) == (2, 3, 1)
        assert d.offset_bytes == 0
        assert pointer.target_file is None

    def test_msb16(self):
        label = parse_odl(ODL_IMAGE.format(lines=4, samples=4, bits=16,
                                           stype="MSB_UNSIGNED_INTEGER", extra=""))
        d, pointer = descriptor_from_odl(label)
        assert d.element == ElementType.uint16_be
        # ^IMAGE = 2 with RECORD_BYTES = 100 -> byte offset 100
        assert d.offset_bytes == 100 and pointer.offset == 100

    def test_lsb16(self):
        label = parse_odl(ODL_IMAGE.format(lines=1, samples=1, bits=16,
                                           stype="LSB_UNSIGNED_INTEGER", extra=""))
        assert descriptor_from_odl(label)[0].element == ElementType.uint16_le

    def test_unsupported_bits(self):
        label = parse_odl(ODL_IMAGE.format(lines=1, samples=1, bits=12,
                                           stype="UNSIGNED_INTEGER", extra=""))
        with pytest.raises(UnsupportedSampleTypeError):
            descriptor_from_odl(label)

    def test_no_image_object(self):
        with pytest.raises(NotFoundError):
            descriptor_from_odl(parse_odl("END"))

    def test_band_storage_types(self):
        for storage, interleave, order in [
            ("BAND_SEQUENTIAL", "band_sequential", ["Band", "Line", "Sample"]),
            ("LINE_INTERLEAVED", "line_interleaved", ["Line", "Band", "Sample"]),
            ("SAMPLE_INTERLEAVED", "pixel_interleaved", ["Line", "Sample", "Band"]),
        ]:
            extra = f"  BANDS = 3\n  BAND_STORAGE_TYPE = {storage}\n"
            label = parse_odl(ODL_IMAGE.format(lines=2, samples=5, bits=8,
                                               stype="UNSIGNED_INTEGER", extra=extra))
            d, _ = descriptor_from_odl(label)
            assert d.interleave == interleave
            assert [a.name for a in d.axes] == order
            assert d.bands == 3

    def test_scaling_and_missing_from_label(self):
        extra = "  SCALING_FACTOR = 0.013\n  OFFSET = -2.5\n  MISSING_CONSTANT = 65535\n"
        label = parse_odl(ODL_IMAGE.format(lines=1, samples=1, bits=16,
                                           stype="MSB_UNSIGNED_INTEGER", extra=extra))
        d, _ = descriptor_from_odl(label)
        assert (d.scaling_factor, d.value_offset, d.missing_constant) == (0.013, -2.5, 65535.0)

    def test_explicit_record_bytes_wins(self):
        label = parse_odl(ODL_IMAGE.format(lines=1, samples=1, bits=8,
                                           stype="UNSIGNED_INTEGER", extra=""))
        d, _ = descriptor_from_odl(label, record_bytes=64)
        assert d.offset_bytes == 64
