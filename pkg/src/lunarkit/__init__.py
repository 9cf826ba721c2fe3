"""lunarkit: PDS3/PDS4 label parsing, raster decoding, PNG export,
unpaired-dataset manifests, and exact GAN/cycle loss math for Chang'E-class
lunar imagery pipelines."""

from .errors import LunarkitError
from .ganmath import (
    LossReport,
    ProbBatch,
    combined_objective,
    cycle_loss,
    discriminator_loss,
    gan_value_estimate,
    generator_loss,
)
from .manifest import (
    ManifestEntry,
    SplitSpec,
    build_entries,
    read_manifest,
    scan_archive,
    split_unpaired,
    write_manifest,
)
from .odl import OdlLabel, OdlStatement, OdlValue, PointerInfo, lookup, parse_odl, pointer_target, serialize_odl
from .pds4 import (
    ArrayDescriptor,
    AxisSpec,
    ElementType,
    Pds4Product,
    descriptor_from_odl,
    expected_payload_bytes,
    parse_pds4,
)
from .pngio import StretchSpec, stretch, write_png
from .raster import ImageRaster, RasterStats, apply_scaling, decode, stats

__version__ = "0.1.0"

__all__ = [
    "LunarkitError",
    "LossReport",
    "ProbBatch",
    "combined_objective",
    "cycle_loss",
    "discriminator_loss",
    "gan_value_estimate",
    "generator_loss",
    "ManifestEntry",
    "SplitSpec",
    "build_entries",
    "read_manifest",
    "scan_archive",
    "split_unpaired",
    "write_manifest",
    "OdlLabel",
    "OdlStatement",
    "OdlValue",
    "PointerInfo",
    "lookup",
    "parse_odl",
    "pointer_target",
    "serialize_odl",
    "ArrayDescriptor",
    "AxisSpec",
    "ElementType",
    "Pds4Product",
    "descriptor_from_odl",
    "expected_payload_bytes",
    "parse_pds4",
    "StretchSpec",
    "stretch",
    "write_png",
    "ImageRaster",
    "RasterStats",
    "apply_scaling",
    "decode",
    "stats",
    "__version__",
]
