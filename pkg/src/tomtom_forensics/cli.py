"""Command line entry point: ``decode``, ``carve``, ``detect`` and ``fixture``.

Machine-readable output goes to files (or stdout where noted); diagnostics
go to stderr.  Exit codes: 0 success, 2 partial decode, 1 fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .carver import DEFAULT_CHUNK_SIZE, scan_file
from .detect import classify_tree, expected_artifacts, list_tree
from .errors import ManualReviewRequired, MalformedStore, TomTomError
from .fixture import write_fixture
from .pipeline import decode_paths
from .report import emit_gpx, emit_json, emit_timeline_csv, hit_json

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2

FORMATS = ("json", "gpx", "csv")
OUTPUT_NAMES = {"json": "report.json", "gpx": "waypoints.gpx", "csv": "timeline.csv"}



class _Parser(argparse.ArgumentParser):
    # argparse uses 2 for usage errors, which here means "partial decode"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FATAL, f"{self.prog}: error: {message}\n")


def _error(msg):
    print(f"tomtom-forensics: error: {msg}", file=sys.stderr)


def _size(text):
    """``16M``, ``512k``, ``1G`` or plain bytes."""
    text = text.strip().lower().removesuffix("ib").removesuffix("b")
    mult = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30}.get(text[-1:], 1)
    if mult != 1:
        text = text[:-1]
    try:
        value = int(text) * mult
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("size must be non-negative")
    return value


def load_header_lengths(path):
    """Header lengths from a JSON config ``{"header_profiles": {model_id: hex}}``."""
    if not path:
        return ()
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    profiles = config.get("header_profiles", {})
    return tuple(sorted({len(bytes.fromhex(v)) for v in profiles.values()}))


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_decode(args):
    try:
        header_lengths = load_header_lengths(args.config)
    except (OSError, ValueError) as exc:
        _error(f"config: {exc}")
        return EXIT_FATAL
    try:
        outcome = decode_paths(args.inputs, strict=args.strict, header_lengths=header_lengths)
    except (OSError, MalformedStore, TomTomError) as exc:
        _error(f"{type(exc).__name__}: {exc}")
        return EXIT_FATAL

    report = outcome.report
    if args.stamp_run_time:
        report.run_time = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    formats = args.format or list(FORMATS)
    rendered = {}
    for fmt in dict.fromkeys(formats):
        if fmt == "json":
            rendered[fmt] = emit_json(report, args.reveal_credentials)
        elif fmt == "gpx":
            rendered[fmt] = emit_gpx(report)
        else:
            rendered[fmt] = emit_timeline_csv(report)

    if args.out == "-":
        for text in rendered.values():
            sys.stdout.write(text)
    else:
        try:
            os.makedirs(args.out, exist_ok=True)
            for fmt, text in rendered.items():
                _write(os.path.join(args.out, OUTPUT_NAMES[fmt]), text)
        except OSError as exc:
            _error(f"cannot write output: {exc}")
            return EXIT_FATAL

    print(f"source class: {report.source.kind.value}", file=sys.stderr)
    for problem in outcome.problems:
        print(f"partial decode: {problem}", file=sys.stderr)
    return EXIT_PARTIAL if outcome.partial else EXIT_OK


def cmd_carve(args):
    progress = sys.stderr if args.progress else None
    try:
        result = scan_file(args.image, chunk_size=args.chunk_size, seek_pattern=args.seek_pattern,
                           progress=progress, jobs=args.jobs)
    except (OSError, ValueError) as exc:
        _error(f"{type(exc).__name__}: {exc}")
        return EXIT_FATAL
    name = os.path.basename(args.image)
    doc = {
        "image": name,
        "size": result.size,
        "chunk_size": args.chunk_size,
        "seek_pattern": args.seek_pattern,
        "hits": [hit_json(h, name) for h in result.hits],
        "gaps": [{"offset": g.offset, "length": g.length, "reason": g.reason} for g in result.gaps],
    }
    text = json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            _write(args.out, text)
        except OSError as exc:
            _error(f"cannot write output: {exc}")
            return EXIT_FATAL
    print(f"{len(result.hits)} hits, {len(result.gaps)} read gaps", file=sys.stderr)
    return EXIT_OK


def _read_listing(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_detect(args):
    try:
        paths = list_tree(args.tree) if os.path.isdir(args.tree) else _read_listing(args.tree)
    except OSError as exc:
        _error(str(exc))
        return EXIT_FATAL
    source = classify_tree(paths)
    try:
        rows = expected_artifacts(source)
    except ManualReviewRequired as exc:
        rows = None
        review = str(exc)

    if args.json:
        doc = {
            "class": source.kind.value,
            "model_id": source.model_id,
            "region": source.region,
            "candidates": [c.value for c in source.candidates],
            "evidence": [{"artifact": a, "path": p} for a, p in source.evidence],
            "notes": list(source.notes),
            "checklist": None if rows is None else [
                {"artifact_class": r.artifact_class, "expected": r.expected, "status": r.status,
                 "found": list(r.found)} for r in rows
            ],
        }
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        out = [f"source class: {source.kind.value}"]
        if source.model_id:
            out.append(f"model id: {source.model_id} ({source.region})")
        if source.candidates:
            out.append("candidates: " + ", ".join(c.value for c in source.candidates))
        out.extend(f"note: {n}" for n in source.notes)
        if rows is None:
            out.append(f"manual review required: {review}")
        else:
            width = max(len(r.artifact_class) for r in rows)
            for r in rows:
                found = f"  [{', '.join(r.found)}]" if r.found else ""
                out.append(f"  {r.artifact_class:<{width}}  {r.status:<12}  {r.expected}{found}")
        sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK


def cmd_fixture(args):
    try:
        manifest = write_fixture(args.out, args.seed, args.records, args.noise_image, args.planted)
    except (OSError, ValueError) as exc:
        _error(f"cannot write fixture: {exc}")
        return EXIT_FATAL
    planted = len(manifest.get("noise_image", {}).get("planted", []))
    print(f"fixture seed {args.seed}: {args.records} records, {planted} planted -> {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="tomtom-forensics",
                     description="Decode TomTom navigation app artifacts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode an evidence tree or individual files")
    p.add_argument("inputs", nargs="+", help="files or directories to decode")
    p.add_argument("--format", action="append", choices=FORMATS,
                   help="output format; repeat for several (default: all)")
    p.add_argument("--out", default="report", help="output directory, or - for stdout")
    p.add_argument("--strict", action="store_true", help="treat any malformed data as fatal")
    p.add_argument("--reveal-credentials", action="store_true", help="do not redact stored passwords")
    p.add_argument("--config", help="JSON file with device header profiles")
    p.add_argument("--stamp-run-time", action="store_true",
                   help="record the wall-clock run time (output no longer reproducible)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("carve", help="scan a raw image for ov2 records and settings fragments")
    p.add_argument("image", help="raw image file")
    p.add_argument("--chunk-size", type=_size, default=DEFAULT_CHUNK_SIZE,
                   help="bytes per chunk, k/M/G suffixes allowed (default: 1M)")
    p.add_argument("--paper-regex", dest="seek_pattern", action="store_true",
                   help="also run the published seek pattern")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output JSON file (default stdout)")
    p.add_argument("--progress", action="store_true", help="JSON progress lines on stderr")
    p.set_defaults(func=cmd_carve)

    p = sub.add_parser("detect", help="classify an evidence tree and list expected artifacts")
    p.add_argument("tree", help="directory, or a file listing one path per line")
    p.add_argument("--json", action="store_true", help="print the result as JSON")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("fixture", help="write a synthetic evidence tree with a manifest")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--records", type=int, default=5, help="records per collection (default: 5)")
    p.add_argument("--noise-image", type=_size, metavar="SIZE",
                   help="also write a noise image of this size with planted favourites")
    p.add_argument("--planted", type=int, help="records planted in the noise image (default: --records)")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "chunk_size", 1) <= 0:
        parser.error("--chunk-size must be positive")
    if getattr(args, "records", 0) < 0:
        parser.error("--records must be non-negative")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
