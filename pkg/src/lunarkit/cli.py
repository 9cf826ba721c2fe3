"""lunarkit command line: inspect, convert, batch, split, verify, losscheck.

Exit codes: 0 ok, 1 usage error, 2 parse/format error, 3 I/O error,
4 verification failure. Diagnostics go to stderr, data and JSON to stdout,
and every command is deterministic for identical inputs and flags
(including --jobs). Empty inputs verify vacuously as success.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import manifest as mf
from . import odl, pds4, pngio, raster
from .errors import (
    EmptyDomainError,
    LunarkitError,
    NotFoundError,
    PayloadTooShortError,
)
from .ganmath import LOSS_REPORT_FIELDS, LossReport

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_IO = 3
EXIT_VERIFY = 4

LOSSCHECK_REL_TOL = 1e-9


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise _UsageError(message)


def _default_seed() -> int:
    try:
        return int(os.environ.get("LUNARKIT_SEED", "0"))
    except ValueError:
        return 0


def _detect_format(path: Path, head: bytes) -> str:
    """Return "odl" or "pds4"; extension first, then content sniff.

    A recognized extension that contradicts the sniffed content is an
    ambiguity error (silent misparse would be worse than refusing).
    """
    suffix = path.suffix.lower()
    by_ext = {".xml": "pds4", ".lbl": "odl"}.get(suffix)
    stripped = head.lstrip(b"\xef\xbb\xbf \t\r\n")
    by_content = None
    if stripped.startswith(b"<"):
        by_content = "pds4"
    elif stripped[:1].isalpha() or stripped.startswith(b"^"):
        by_content = "odl"
    if by_ext and by_content and by_ext != by_content:
        raise LunarkitError(
            f"{path}: ambiguous format (extension says {by_ext}, content says {by_content})"
        )
    fmt = by_ext or by_content
    if fmt is None:
        raise LunarkitError(f"{path}: cannot identify format (tried odl and pds4)")
    return fmt


def _load_label(path: Path):
    """Returns ("odl", OdlLabel) or ("pds4", Pds4Product)."""
    data = path.read_bytes()
    fmt = _detect_format(path, data[:4096])
    if fmt == "pds4":
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise pds4.XmlMalformedError(f"{path}: not UTF-8 text: {exc}") from exc
        return fmt, pds4.parse_pds4(text)
    return fmt, odl.parse_odl(data.decode("latin-1"))


def cmd_inspect(args) -> int:
    fmt, parsed = _load_label(Path(args.label))
    if fmt == "pds4":
        doc = {"v": 1, "format": "pds4", **pds4.product_to_json(parsed)}
        if args.json:
            print(json.dumps(doc, indent=2))
        else:
            print(f"product_class: {doc['product_class']}")
            print(f"lid: {doc['lid']}")
            print(f"file: {doc['file']}")
            for i, arr in enumerate(doc["arrays"]):
                dims = "x".join(str(a["elements"]) for a in arr["axes"])
                print(f"array[{i}]: {dims} {arr['element_type']} {arr['interleave']} "
                      f"offset={arr['offset_bytes']}")
    else:
        if args.json:
            doc = {"v": 1, "format": "odl", "label": odl.label_to_json(parsed)}
            print(json.dumps(doc, indent=2))
        else:
            sys.stdout.write(odl.serialize_odl(parsed))
    return EXIT_OK


def _parse_stretch(text: str, depth: int) -> pngio.StretchSpec:
    if text == "minmax":
        return pngio.StretchSpec(method=pngio.METHOD_MINMAX, depth=depth)
    if text == "none":
        return pngio.StretchSpec(method=pngio.METHOD_NONE, depth=depth)
    if text.startswith("p"):
        try:
            lo, hi = (float(part) for part in text[1:].split(","))
        except ValueError:
            raise _UsageError(f"bad --stretch value {text!r}") from None
        return pngio.StretchSpec(method=pngio.METHOD_PERCENTILE, p_lo=lo, p_hi=hi, depth=depth)
    raise _UsageError(f"bad --stretch value {text!r} (want minmax, none, or pLO,HI)")


def _payload_for_label(label_path: Path, fmt, parsed) -> tuple[bytes, pds4.ArrayDescriptor, str]:
    if fmt == "pds4":
        if not parsed.arrays:
            raise NotFoundError(f"{label_path}: label describes no image array")
        payload_file = label_path.parent / parsed.file_name
        descriptor = parsed.arrays[0]
        product_id = parsed.logical_identifier or label_path.stem
    else:
        descriptor, pointer = pds4.descriptor_from_odl(parsed)
        payload_file = (
            label_path if pointer.target_file is None
            else label_path.parent / pointer.target_file
        )
        try:
            product_id = str(odl.lookup(parsed, ["PRODUCT_ID"]).value)
        except NotFoundError:
            product_id = label_path.stem
    return payload_file.read_bytes(), descriptor, product_id


def cmd_convert(args) -> int:
    label_path = Path(args.label)
    fmt, parsed = _load_label(label_path)
    payload, descriptor, product_id = _payload_for_label(label_path, fmt, parsed)
    decoded = raster.decode(descriptor, payload)
    scaled = raster.apply_scaling(
        decoded, descriptor.scaling_factor, descriptor.value_offset, descriptor.missing_constant
    )
    spec = _parse_stretch(args.stretch, args.depth)
    st = raster.stats(scaled)
    if spec.method == pngio.METHOD_MINMAX:
        lo, hi = st.min, st.max
    elif spec.method == pngio.METHOD_PERCENTILE:
        lo, hi = st.percentile(spec.p_lo), st.percentile(spec.p_hi)
    else:
        lo, hi = 0.0, float(2**spec.depth - 1)
    quant = pngio.stretch(scaled, spec)
    pngio.write_png(quant, args.out, source_id=product_id)
    print(
        f"{decoded.width}x{decoded.height}x{decoded.bands} {descriptor.element.value} "
        f"-> {args.out} [lo={lo:g} hi={hi:g}] {spec.depth}-bit"
    )
    return EXIT_OK


def cmd_batch(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(args.manifest) if args.manifest else out_dir / "manifest.jsonl"
    skip_path = manifest_path.with_name(
        manifest_path.name.removesuffix(".jsonl") + ".skips.jsonl"
    )

    scan = mf.scan_archive(args.root)
    result = mf.build_entries(
        args.root, scan.pairs, convert=True, out_dir=out_dir, jobs=args.jobs
    )
    skips = list(result.skips) + [
        mf.SkipRecord(o.label_path, o.reason) for o in scan.orphans
    ]
    skips.sort(key=lambda s: s.label_path)
    mf.write_manifest(result.entries, manifest_path)
    mf.write_skip_report(skips, skip_path)
    print(
        f"{len(result.entries)}/{len(scan.pairs) + len(scan.orphans)} products converted, "
        f"{len(skips)} skipped",
        file=sys.stderr,
    )
    if (scan.pairs or scan.orphans) and not result.entries:
        return EXIT_VERIFY
    return EXIT_OK


def _parse_mode(text: str, seed: int) -> mf.SplitSpec:
    kind, _, rest = text.partition(":")
    if kind == "ratio" and rest:
        try:
            fraction = float(rest)
        except ValueError:
            raise _UsageError(f"bad ratio {rest!r}") from None
        return mf.SplitSpec(seed=seed, mode="by_ratio", fraction_a=fraction)
    if kind == "field" and "=" in rest:
        field, _, pattern = rest.partition("=")
        return mf.SplitSpec(seed=seed, mode="by_predicate", field=field, pattern=pattern)
    raise _UsageError(f"bad --mode {text!r} (want ratio:F or field:NAME=GLOB)")


def cmd_split(args) -> int:
    try:
        spec = _parse_mode(args.mode, args.seed)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    entries = mf.read_manifest(args.manifest)
    try:
        side_a, side_b = mf.split_unpaired(entries, spec)
    except EmptyDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    mf.write_manifest(side_a, args.out_a)
    mf.write_manifest(side_b, args.out_b)
    print(f"|A|={len(side_a)} |B|={len(side_b)}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    root = Path(args.root)
    scan = mf.scan_archive(root)
    failures = 0
    for orphan in scan.orphans:
        print(f"FAIL {orphan.label_path}: {orphan.reason}")
        failures += 1
    for label_rel, data_rel in scan.pairs:
        try:
            fmt, parsed = _load_label(root / label_rel)
            if fmt == "pds4":
                if not parsed.arrays:
                    raise NotFoundError("label describes no image array")
                descriptor = parsed.arrays[0]
            else:
                descriptor, _ = pds4.descriptor_from_odl(parsed)
            need = descriptor.offset_bytes + pds4.expected_payload_bytes(descriptor)
            have = (root / data_rel).stat().st_size
            if have < need:
                raise PayloadTooShortError(need, have)
            print(f"PASS {label_rel}")
        except (LunarkitError, OSError) as exc:
            print(f"FAIL {label_rel}: {exc}")
            failures += 1
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_losscheck(args) -> int:
    flags = 0
    lines = 0
    with open(args.losslog, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            lines += 1
            try:
                obj = json.loads(line)
                report = LossReport.from_dict(obj)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                print(f"error: line {lineno}: {exc}", file=sys.stderr)
                return EXIT_PARSE
            recomputed = report.recomputed_total()
            tol = LOSSCHECK_REL_TOL * max(1.0, abs(report.total))
            if abs(report.total - recomputed) > tol:
                print(
                    f"FAIL line {lineno}: total {report.total!r} != recomputed {recomputed!r}"
                )
                flags += 1
            if report.cycle_forward < 0 or report.cycle_backward < 0:
                print(f"FAIL line {lineno}: negative cycle loss")
                flags += 1
    if flags:
        return EXIT_VERIFY
    print(f"{lines} loss lines ok")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lunarkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print parsed label metadata")
    p.add_argument("label")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("convert", help="convert one product to PNG")
    p.add_argument("label")
    p.add_argument("--out", required=True)
    p.add_argument("--stretch", default="p0.5,99.5", help="minmax | none | pLO,HI")
    p.add_argument("--depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("batch", help="convert an archive tree and write a manifest")
    p.add_argument("root")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None, help="default: OUT/manifest.jsonl")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("split", help="split a manifest into two unpaired domains")
    p.add_argument("manifest")
    p.add_argument("--mode", required=True, help="ratio:F or field:NAME=GLOB")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("verify", help="check every product's label and payload size")
    p.add_argument("root")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("losscheck", help="recompute totals in a training loss log")
    p.add_argument("losslog")
    p.set_defaults(func=cmd_losscheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LunarkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
