"""Archive scanning, conversion batches, and deterministic unpaired splits.

Manifests are JSON Lines, schema v1: one object per line, keys always in
the fixed order below, LF endings, paths archive-root-relative with forward
slashes. Readers reject unknown keys so the format stays versionable via
the explicit "v" field. Every operation here is a deterministic function of
the tree contents and the spec: scans sort, builds preserve scan order, and
the ratio split shuffles with the pinned PRNG from lunarkit.rng.
"""

from __future__ import annotations

import fnmatch
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path, PurePosixPath

from . import odl, pds4, pngio, raster
from .errors import EmptyDomainError, LunarkitError, NotFoundError, SchemaError
from .rng import Xoshiro256StarStar

MANIFEST_VERSION = 1

DOMAIN_A = "A"
DOMAIN_B = "B"
DOMAIN_UNASSIGNED = "unassigned"

ENTRY_FIELDS = (
    "product_id",
    "label_path",
    "data_path",
    "png_path",
    "width",
    "height",
    "bands",
    "element_type",
    "camera",
    "acquisition_time",
    "domain",
)

_REQUIRED_INTS = ("width", "height", "bands")
_OPTIONAL_STRS = ("png_path", "camera", "acquisition_time")


@dataclass(frozen=True)
class ManifestEntry:
    product_id: str
    label_path: str
    data_path: str
    width: int
    height: int
    bands: int
    element_type: str
    png_path: str | None = None
    camera: str | None = None
    acquisition_time: str | None = None
    domain: str = DOMAIN_UNASSIGNED

    def to_json_obj(self) -> dict:
        obj = {"v": MANIFEST_VERSION}
        for f in ENTRY_FIELDS:
            obj[f] = getattr(self, f)
        return obj


def entry_from_json_obj(obj: dict) -> ManifestEntry:
    expected = {"v", *ENTRY_FIELDS}
    if set(obj) != expected:
        unknown = sorted(set(obj) - expected)
        missing = sorted(expected - set(obj))
        raise SchemaError(f"manifest keys off schema: unknown={unknown} missing={missing}")
    if obj["v"] != MANIFEST_VERSION:
        raise SchemaError(f"unsupported manifest version {obj['v']!r}")
    if obj["domain"] not in (DOMAIN_A, DOMAIN_B, DOMAIN_UNASSIGNED):
        raise SchemaError(f"bad domain {obj['domain']!r}")
    for f in _REQUIRED_INTS:
        if not isinstance(obj[f], int):
            raise SchemaError(f"{f} must be an integer")
    return ManifestEntry(**{f: obj[f] for f in ENTRY_FIELDS})


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    mode: str                       # "by_ratio" | "by_predicate"
    fraction_a: float | None = None
    field: str | None = None
    pattern: str | None = None

    def __post_init__(self):
        if self.mode == "by_ratio":
            if self.fraction_a is None or not 0.0 < self.fraction_a < 1.0:
                raise ValueError("by_ratio needs 0 < fraction_a < 1")
        elif self.mode == "by_predicate":
            if self.field not in ENTRY_FIELDS or self.pattern is None:
                raise ValueError("by_predicate needs a manifest field and a pattern")
        else:
            raise ValueError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class Orphan:
    label_path: str
    reason: str


@dataclass(frozen=True)
class ScanResult:
    pairs: tuple[tuple[str, str], ...]   # (label_path, data_path), root-relative
    orphans: tuple[Orphan, ...]


def _rel_posix(path: Path, root: Path) -> str:
    return str(PurePosixPath(*path.relative_to(root).parts))


def _resolve_payload(label_file: Path, name: str) -> Path | None:
    candidate = label_file.parent / name
    if candidate.is_file():
        return candidate
    matches = [
        p for p in sorted(label_file.parent.iterdir())
        if p.name.lower() == name.lower() and p.is_file()
    ]
    return matches[0] if matches else None


def scan_archive(root) -> ScanResult:
    """Pair every .xml/.lbl label under root with its payload file.

    PDS4 labels name their payload via file_name; PDS3 via the ^IMAGE
    pointer (attached labels pair with themselves). Pairs come back sorted
    by label path; labels that fail to parse or whose payload is missing are
    reported as orphans, never raised.
    """
    root = Path(root)
    pairs: list[tuple[str, str]] = []
    orphans: list[Orphan] = []

    label_files: list[Path] = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for fname in sorted(filenames):
            if fname.lower().endswith((".xml", ".lbl")):
                label_files.append(Path(dirpath) / fname)
    label_files.sort(key=lambda p: _rel_posix(p, root))

    for label_file in label_files:
        rel = _rel_posix(label_file, root)
        try:
            if label_file.name.lower().endswith(".xml"):
                product = pds4.parse_pds4(label_file.read_text(encoding="utf-8"))
                payload = _resolve_payload(label_file, product.file_name)
                if payload is None:
                    orphans.append(Orphan(rel, f"payload {product.file_name!r} not found"))
                    continue
            else:
                label = odl.parse_odl(label_file.read_bytes().decode("latin-1"))
                try:
                    pointer = odl.pointer_target(label, "IMAGE", record_bytes=0)
                except NotFoundError:
                    pointer = odl.PointerInfo(None, 0, "bytes")
                if pointer.target_file is None:
                    odl.find_block(label, "IMAGE", "OBJECT")  # no image object -> orphan
                    payload = label_file
                else:
                    payload = _resolve_payload(label_file, pointer.target_file)
                    if payload is None:
                        orphans.append(
                            Orphan(rel, f"payload {pointer.target_file!r} not found")
                        )
                        continue
            pairs.append((rel, _rel_posix(payload, root)))
        except LunarkitError as exc:
            orphans.append(Orphan(rel, f"{type(exc).__name__}: {exc}"))

    pairs.sort(key=lambda pair: pair[0])
    return ScanResult(tuple(pairs), tuple(orphans))


@dataclass(frozen=True)
class SkipRecord:
    label_path: str
    reason: str

    def to_json_obj(self) -> dict:
        return {"v": MANIFEST_VERSION, "label_path": self.label_path, "reason": self.reason}


@dataclass(frozen=True)
class BuildResult:
    entries: tuple[ManifestEntry, ...]
    skips: tuple[SkipRecord, ...]


_SAFE_NAME = re.compile(r"[^A-Za-z0-9._-]+")


def _png_name(product_id: str) -> str:
    return _SAFE_NAME.sub("_", product_id) + ".png"


def _decode_product(root: Path, label_rel: str, data_rel: str):
    """Parse + decode one product; returns (product_id, camera, time, raster)."""
    label_file = root / label_rel
    if label_rel.lower().endswith(".xml"):
        product = pds4.parse_pds4(label_file.read_text(encoding="utf-8"))
        if not product.arrays:
            raise NotFoundError("label describes no image array")
        descriptor = product.arrays[0]  # first array in document order is primary
        product_id = product.logical_identifier or PurePosixPath(label_rel).stem
        camera = product.instrument_name
        acq_time = product.start_time
    else:
        label = odl.parse_odl(label_file.read_bytes().decode("latin-1"))
        descriptor, _ = pds4.descriptor_from_odl(label)
        product_id = _odl_str(label, "PRODUCT_ID") or PurePosixPath(label_rel).stem
        camera = _odl_str(label, "INSTRUMENT_ID") or _odl_str(label, "INSTRUMENT_NAME")
        acq_time = _odl_str(label, "START_TIME") or _odl_str(label, "IMAGE_TIME")

    payload = (root / data_rel).read_bytes()
    decoded = raster.decode(descriptor, payload)
    scaled = raster.apply_scaling(
        decoded, descriptor.scaling_factor, descriptor.value_offset, descriptor.missing_constant
    )
    return product_id, camera, acq_time, descriptor, decoded, scaled


def _odl_str(label: odl.OdlLabel, keyword: str) -> str | None:
    try:
        return str(odl.lookup(label, [keyword]).value)
    except NotFoundError:
        return None


def build_entries(
    root,
    pairs,
    convert: bool = False,
    out_dir=None,
    stretch_spec: pngio.StretchSpec | None = None,
    jobs: int = 1,
) -> BuildResult:
    """Decode every (label, payload) pair into a ManifestEntry.

    With convert=True, a PNG is exported per product into out_dir using the
    given stretch (default percentile 0.5/99.5 at 8 bit) and png_path is set
    to the file's name (paths in the manifest resolve against the manifest's
    own directory). Per-product failures become skip records; the batch
    never aborts. Output is ordered by the input pair order regardless of
    the worker count.
    """
    root = Path(root)
    spec = stretch_spec or pngio.StretchSpec()
    if convert:
        if out_dir is None:
            raise ValueError("convert=True needs out_dir")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    def work(pair):
        label_rel, data_rel = pair
        product_id, camera, acq_time, descriptor, decoded, scaled = _decode_product(
            root, label_rel, data_rel
        )
        png_path = None
        if convert:
            png_path = _png_name(product_id)
            quant = pngio.stretch(scaled, spec)
            pngio.write_png(quant, out_dir / png_path, source_id=product_id)
        return ManifestEntry(
            product_id=product_id,
            label_path=label_rel,
            data_path=data_rel,
            png_path=png_path,
            width=decoded.width,
            height=decoded.height,
            bands=decoded.bands,
            element_type=descriptor.element.value,
            camera=camera,
            acquisition_time=acq_time,
        )

    results: list[ManifestEntry | SkipRecord] = [None] * len(pairs)

    def run(idx_pair):
        idx, pair = idx_pair
        try:
            results[idx] = work(pair)
        except LunarkitError as exc:
            results[idx] = SkipRecord(pair[0], f"{type(exc).__name__}: {exc}")
        except OSError as exc:
            results[idx] = SkipRecord(pair[0], f"OSError: {exc}")

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run, enumerate(pairs)))
    else:
        for item in enumerate(pairs):
            run(item)

    entries: list[ManifestEntry] = []
    skips: list[SkipRecord] = []
    seen: set[str] = set()
    for res in results:
        if isinstance(res, SkipRecord):
            skips.append(res)
        elif res.product_id in seen:
            skips.append(SkipRecord(res.label_path, f"duplicate product_id {res.product_id!r}"))
        else:
            seen.add(res.product_id)
            entries.append(res)
    return BuildResult(tuple(entries), tuple(skips))


def split_unpaired(entries, spec: SplitSpec) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Partition entries into the two unpaired training domains.

    by_predicate sends glob matches on a manifest field to A, the rest to B.
    by_ratio sorts by product_id, shuffles with xoshiro256** (seeded from
    spec.seed), and sends the first ceil(n * fraction_a) to A. The result is
    always a disjoint cover; an empty side raises EmptyDomainError. Returned
    entries carry their domain tag.
    """
    entries = list(entries)
    if not entries:
        raise EmptyDomainError("no entries to split")
    if spec.mode == "by_predicate":
        a, b = [], []
        for e in entries:
            value = getattr(e, spec.field)
            matched = value is not None and fnmatch.fnmatchcase(str(value), spec.pattern)
            (a if matched else b).append(e)
    else:
        ordered = sorted(entries, key=lambda e: e.product_id)
        Xoshiro256StarStar(spec.seed).shuffle(ordered)
        n_a = math.ceil(len(ordered) * spec.fraction_a)
        a, b = ordered[:n_a], ordered[n_a:]
    if not a or not b:
        raise EmptyDomainError(
            f"split left a domain empty (|A|={len(a)}, |B|={len(b)})"
        )
    a = [replace(e, domain=DOMAIN_A) for e in a]
    b = [replace(e, domain=DOMAIN_B) for e in b]
    return a, b


def write_manifest(entries, path) -> None:
    """JSON Lines, fixed key order, LF endings; byte-identical for equal input."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_json_obj(), separators=(",", ":")) + "\n")


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: not valid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"line {lineno}: expected an object")
            try:
                entries.append(entry_from_json_obj(obj))
            except SchemaError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from exc
    return entries


def write_skip_report(skips, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in skips:
            fh.write(json.dumps(s.to_json_obj(), separators=(",", ":")) + "\n")
