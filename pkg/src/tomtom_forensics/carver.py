"""Signature carving of ov2 favourites and settings-store fragments from raw images.

The image is read as a stream in chunks of ``chunk_size`` bytes, each
extended by ``overlap`` bytes of look-ahead.  Only hits *starting* inside a
chunk's own ``chunk_size`` bytes are reported for that chunk, and the
overlap is at least one maximal record long, so every record is seen whole
exactly once regardless of how the image is cut up.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .ov2 import MAX_CARVE_LEN, SEEK_PATTERN, SIMPLE_POI_MIN_LEN, _decode_record, validate_simple_poi
from .settings_xml import parse_store

OV2_SIMPLE_POI = "ov2_simple_poi"
SETTINGS_FRAGMENT = "settings_fragment"
# Seek-pattern hits are reported raw: the 0x64 0x15 prefix may mark a favourite
# file header or a record, and the bytes alone do not tell which.
SEEK_PATTERN_HIT = "seek_pattern"

STRUCTURAL = "structural"
WEAK = "weak"

DEFAULT_CHUNK_SIZE = 1 << 20
MIN_OVERLAP = MAX_CARVE_LEN + SIMPLE_POI_MIN_LEN

_SETTINGS_START = re.compile(rb'<string\s+name\s*=\s*"(?:MapSettings|NavkitSettings)\*')
_SETTINGS_END = re.compile(rb"</string\s*>")


@dataclass(frozen=True)
class CarveHit:
    offset: int
    kind: str
    length: int
    payload: object
    confidence: str = STRUCTURAL

    @property
    def end(self) -> int:
        return self.offset + self.length


@dataclass(frozen=True)
class ScanGap:
    offset: int
    length: int
    reason: str


@dataclass
class ScanResult:
    hits: list
    gaps: list
    size: int


def _ov2_prefilter(max_len):
    # type byte 0x02 followed by a little-endian length whose high bytes are zero
    if max_len < 1 << 16:
        return re.compile(rb"\x02(?=[\s\S]{2}\x00\x00)")
    if max_len < 1 << 24:
        return re.compile(rb"\x02(?=[\s\S]{3}\x00)")
    return re.compile(rb"\x02")


def scan_buffer(buf, base: int, limit: int, max_len: int = MAX_CARVE_LEN, seek_pattern: bool = False) -> list:
    """Hits in ``buf`` whose start offset (relative) is below ``limit``.

    ``base`` is the absolute image offset of ``buf[0]``.
    """
    hits = []
    view = memoryview(buf)
    for m in _ov2_prefilter(max_len).finditer(buf):
        rel = m.start()
        if rel >= limit:
            break
        ok, _ = validate_simple_poi(view[rel : rel + max_len], max_len)
        if not ok:
            continue
        rec, consumed = _decode_record(buf, rel)
        hits.append(CarveHit(base + rel, OV2_SIMPLE_POI, consumed, rec))

    for m in _SETTINGS_START.finditer(buf):
        rel = m.start()
        if rel >= limit:
            break
        end = _SETTINGS_END.search(buf, rel, rel + MIN_OVERLAP)
        if not end:
            continue
        fragment = bytes(buf[rel : end.end()]).decode("utf-8", errors="replace")
        parsed = parse_store(fragment)
        if len(parsed.entries) == 1 and not parsed.malformed:
            hits.append(CarveHit(base + rel, SETTINGS_FRAGMENT, end.end() - rel, parsed.entries[0]))

    if seek_pattern:
        for m in SEEK_PATTERN.finditer(buf):
            if m.start() >= limit:
                break
            hits.append(CarveHit(base + m.start(), SEEK_PATTERN_HIT, len(m.group()), m.group().hex(), WEAK))
    return hits


def dedupe_hits(hits) -> list:
    """Drop hits overlapping a longer hit of the same kind."""
    kept = []
    by_kind = {}
    for h in sorted(hits, key=lambda h: (-h.length, h.offset, h.kind)):
        spans = by_kind.setdefault(h.kind, [])
        if any(h.offset < e and s < h.end for s, e in spans):
            continue
        spans.append((h.offset, h.end))
        kept.append(h)
    return sorted(kept, key=lambda h: (h.offset, h.kind))


def rank_hits(hits) -> list:
    """Structural hits first, then ascending offset."""
    return sorted(hits, key=lambda h: (h.confidence != STRUCTURAL, h.offset, h.kind, h.length))


def _check_window(chunk_size, overlap, max_len):
    if overlap is None:
        overlap = max_len + SIMPLE_POI_MIN_LEN
    need = max(max_len + SIMPLE_POI_MIN_LEN, MIN_OVERLAP)
    if overlap < need:
        raise ValueError(f"overlap must be >= {need} bytes, got {overlap}")
    if chunk_size <= overlap:
        raise ValueError(f"chunk_size ({chunk_size}) must exceed overlap ({overlap})")
    return overlap


def _emit_progress(progress, chunk, offset, length, n_hits):
    if progress is not None:
        progress.write(json.dumps({"chunk": chunk, "offset": offset, "bytes": length, "hits": n_hits}) + "\n")


def scan_image(stream, chunk_size=DEFAULT_CHUNK_SIZE, overlap=None, max_len=MAX_CARVE_LEN,
               seek_pattern=False, progress=None) -> ScanResult:
    """Stream ``stream`` through the carver.

    Read errors are recorded as gaps (zero-filled so offsets stay aligned)
    and scanning continues after them.  ``progress`` receives one JSON line
    per chunk.
    """
    overlap = _check_window(chunk_size, overlap, max_len)
    window = chunk_size + overlap
    hits, gaps = [], []
    buf = bytearray()
    base = 0
    eof = False
    chunk = 0
    while True:
        while len(buf) < window and not eof:
            want = window - len(buf)
            try:
                data = stream.read(want)
            except OSError as exc:
                at = base + len(buf)
                skip = min(want, chunk_size)
                gaps.append(ScanGap(at, skip, str(exc)))
                try:
                    stream.seek(at + skip)
                except (OSError, ValueError):
                    eof = True
                    break
                buf.extend(b"\x00" * skip)
                continue
            if not data:
                eof = True
            buf.extend(data)
        last = eof and len(buf) <= chunk_size
        limit = len(buf) if last else chunk_size
        found = scan_buffer(bytes(buf), base, limit, max_len, seek_pattern)
        hits.extend(found)
        _emit_progress(progress, chunk, base, min(limit, len(buf)), len(found))
        chunk += 1
        if last:
            size = base + len(buf)
            break
        del buf[:chunk_size]
        base += chunk_size
    return ScanResult(rank_hits(dedupe_hits(hits)), gaps, size)


def _scan_file_chunk(args):
    path, start, chunk_size, overlap, size, max_len, seek_pattern = args
    with open(path, "rb") as fh:
        fh.seek(start)
        buf = fh.read(chunk_size + overlap)
    limit = min(chunk_size, size - start)
    return start, limit, scan_buffer(buf, start, limit, max_len, seek_pattern)


def scan_file(path, chunk_size=DEFAULT_CHUNK_SIZE, overlap=None, max_len=MAX_CARVE_LEN,
              seek_pattern=False, progress=None, jobs=1) -> ScanResult:
    """Scan an image file; ``jobs > 1`` fans chunks out to worker processes."""
    if jobs <= 1:
        with open(path, "rb") as fh:
            return scan_image(fh, chunk_size, overlap, max_len, seek_pattern, progress)
    overlap = _check_window(chunk_size, overlap, max_len)
    size = os.path.getsize(path)
    tasks = [(os.fspath(path), s, chunk_size, overlap, size, max_len, seek_pattern)
             for s in range(0, max(size, 1), chunk_size)]
    hits = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for i, (start, limit, found) in enumerate(pool.map(_scan_file_chunk, tasks)):
            hits.extend(found)
            _emit_progress(progress, i, start, max(limit, 0), len(found))
    return ScanResult(rank_hits(dedupe_hits(hits)), [], size)
