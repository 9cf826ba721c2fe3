"""Shared fixtures: synthetic PDS4/PDS3 archives with known payloads."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

PDS4_2D_TEMPLATE = """<?xml version="1.0" encoding="UTF-8"?>
<Product_Observational xmlns="http://pds.nasa.gov/pds4/pds/v1">
  <Identification_Area>
    <logical_identifier>{lid}</logical_identifier>
    <version_id>1.0</version_id>
    <title>{title}</title>
  </Identification_Area>
  <Observation_Area>
    <Time_Coordinates>
      <start_date_time>{start_time}</start_date_time>
    </Time_Coordinates>
    <Observing_System>
      <Observing_System_Component>
        <name>{instrument}</name>
        <type>Instrument</type>
      </Observing_System_Component>
    </Observing_System>
  </Observation_Area>
  <File_Area_Observational>
    <File>
      <file_name>{data_name}</file_name>
    </File>
    <Array_2D_Image>
      <offset unit="byte">{offset}</offset>
      <axes>2</axes>
      <Element_Array>
        <data_type>{data_type}</data_type>
      </Element_Array>
      <Axis_Array>
        <axis_name>Line</axis_name>
        <elements>{lines}</elements>
        <sequence_number>1</sequence_number>
      </Axis_Array>
      <Axis_Array>
        <axis_name>Sample</axis_name>
        <elements>{samples}</elements>
        <sequence_number>2</sequence_number>
      </Axis_Array>
    </Array_2D_Image>
  </File_Area_Observational>
</Product_Observational>
"""

PDS3_TEMPLATE = """PDS_VERSION_ID = PDS3
RECORD_BYTES = {record_bytes}
^IMAGE = ("{data_name}", 1)
PRODUCT_ID = "{product_id}"
INSTRUMENT_ID = {instrument}
START_TIME = {start_time}
OBJECT = IMAGE
  LINES = {lines}
  LINE_SAMPLES = {samples}
  SAMPLE_TYPE = {sample_type}
  SAMPLE_BITS = {sample_bits}
END_OBJECT = IMAGE
END
"""


def write_pds4_product(
    directory: Path,
    name: str,
    lines: int = 4,
    samples: int = 4,
    data_type: str = "UnsignedByte",
    payload: bytes | None = None,
    instrument: str = "PCAM",
    offset: int = 0,
    lid: str | None = None,
) -> tuple[Path, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    data_name = f"{name}.img"
    label = directory / f"{name}.xml"
    data = directory / data_name
    widths = {"UnsignedByte": 1, "UnsignedMSB2": 2, "UnsignedLSB2": 2, "SignedMSB2": 2}
    if payload is None:
        n = lines * samples * widths[data_type]
        payload = bytes((i * 7 + 3) % 256 for i in range(n))
    label.write_text(
        PDS4_2D_TEMPLATE.format(
            lid=lid or f"urn:nasa:pds:ce4_fixture:data:{name}",
            title=f"fixture {name}",
            start_time="2019-01-03T10:25:31Z",
            instrument=instrument,
            data_name=data_name,
            offset=offset,
            data_type=data_type,
            lines=lines,
            samples=samples,
        ),
        encoding="utf-8",
    )
    data.write_bytes(b"\x00" * offset + payload)
    return label, data


def write_pds3_product(
    directory: Path,
    name: str,
    lines: int = 4,
    samples: int = 4,
    sample_bits: int = 8,
    sample_type: str = "UNSIGNED_INTEGER",
    payload: bytes | None = None,
    instrument: str = "TCAM",
) -> tuple[Path, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    data_name = f"{name}.IMG"
    label = directory / f"{name}.lbl"
    data = directory / data_name
    if payload is None:
        n = lines * samples * (sample_bits // 8)
        payload = bytes((i * 11 + 5) % 256 for i in range(n))
    label.write_text(
        PDS3_TEMPLATE.format(
            record_bytes=samples * (sample_bits // 8),
            data_name=data_name,
            product_id=name,
            instrument=instrument,
            start_time="2013-12-23T19:00:00Z",
            lines=lines,
            samples=samples,
            sample_type=sample_type,
            sample_bits=sample_bits,
        ),
        encoding="ascii",
    )
    data.write_bytes(payload)
    return label, data


@pytest.fixture
def archive(tmp_path: Path) -> Path:
    """Four intact products: two PDS4 (one 16-bit), two PDS3 (one 16-bit)."""
    root = tmp_path / "archive"
    rng = np.random.default_rng(20190103)
    write_pds4_product(root / "pcam", "p001", lines=5, samples=7, instrument="PCAM-L")
    write_pds4_product(
        root / "pcam",
        "p002",
        lines=6,
        samples=4,
        data_type="UnsignedMSB2",
        payload=rng.integers(0, 65536, 24, dtype=np.uint16).astype(">u2").tobytes(),
        instrument="PCAM-R",
    )
    write_pds3_product(root / "tcam", "t001", lines=3, samples=9, instrument="TCAM")
    write_pds3_product(
        root / "tcam",
        "t002",
        lines=4,
        samples=4,
        sample_bits=16,
        sample_type="MSB_UNSIGNED_INTEGER",
        payload=rng.integers(0, 65536, 16, dtype=np.uint16).astype(">u2").tobytes(),
        instrument="TCAM",
    )
    return root


ODL_FIXTURE_DIR = Path(__file__).parent / "fixtures" / "odl"
