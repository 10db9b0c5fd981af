"""Reader and writer for TomTom ``.ov2`` POI / favourites files.

An ov2 file is a flat sequence of records, each starting with a one-byte
type and a little-endian uint32 length::

    type 0  deleted       type, length, <length - 5 unused bytes>
    type 1  skipper       type, region length, west lon, south lat, east lon, north lat
    type 2  simple POI    type, length, lon, lat, NUL-terminated name
    type 3  extended POI  type, length, <opaque payload>

Coordinates are signed int32 in degrees x 10^5.  A skipper record is always
21 bytes on disk; its length field gives the size of the region it covers
(itself included), so records inside the region follow it directly.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

from .errors import EmptyInput, ParseError, RangeError, ValidationError
from .geo_time import GeoPoint, coordinate_in_range

DELETED, SKIPPER, SIMPLE_POI, EXTENDED_POI = 0, 1, 2, 3

HEADER_LEN = 5
SKIPPER_LEN = 21
SIMPLE_POI_MIN_LEN = 14
MAX_CARVE_LEN = 1024

# Published form of the favourite seek pattern, kept verbatim for reference;
# the brace/bracket mix makes it unusable as written.
PUBLISHED_SEEK_PATTERN_LITERAL = r"\x64\x15\x00{3}{\x01-\xFE}{4}\x00{5}\x80\x00[\x01-\xFE]{1}\x00{4}"
SEEK_PATTERN = re.compile(
    rb"\x64\x15\x00{3}[\x01-\xFE]{4}\x00{5}\x80\x00[\x01-\xFE]\x00{4}", re.DOTALL
)

NAME_ENCODING = "utf-8"

_HDR = struct.Struct("<BI")
_POS = struct.Struct("<ii")
_BOX = struct.Struct("<iiii")


@dataclass(frozen=True)
class Deleted:
    total_len: int
    filler: bytes = b""

    kind = "deleted"

    def __post_init__(self):
        if not self.filler:
            object.__setattr__(self, "filler", b"\x00" * max(self.total_len - HEADER_LEN, 0))


@dataclass(frozen=True)
class Skipper:
    total_len: int
    west_south: GeoPoint
    east_north: GeoPoint

    kind = "skipper"


@dataclass(frozen=True)
class SimplePoi:
    pos: GeoPoint
    name: bytes
    total_len: int = -1

    kind = "simple_poi"

    def __post_init__(self):
        if isinstance(self.name, str):
            object.__setattr__(self, "name", self.name.encode(NAME_ENCODING))
        if self.total_len == -1:
            object.__setattr__(self, "total_len", 13 + len(self.name) + 1)

    @property
    def text(self) -> str:
        """Best-effort rendering of the name bytes."""
        return self.name.decode(NAME_ENCODING, errors="replace")


@dataclass(frozen=True)
class ExtendedPoi:
    total_len: int
    payload: bytes

    kind = "extended_poi"


@dataclass(frozen=True)
class Gap:
    """Undecodable run kept verbatim by tolerant parsing."""

    offset: int
    data: bytes
    reason: str


@dataclass
class Ov2File:
    records: list = field(default_factory=list)
    header: bytes = b""
    source_offsets: list = field(default_factory=list)
    gaps: list = field(default_factory=list)


def _decode_record(data, offset):
    """Decode the record at ``offset``; returns (record, consumed) or raises ParseError."""
    remaining = len(data) - offset
    if remaining < HEADER_LEN:
        raise ParseError(offset, f"{HEADER_LEN}-byte record header", f"{remaining} bytes")
    kind, total_len = _HDR.unpack_from(data, offset)

    if kind == DELETED:
        if total_len < HEADER_LEN:
            raise ParseError(offset + 1, f"length >= {HEADER_LEN}", total_len)
        if total_len > remaining:
            raise ParseError(offset + 1, f"length <= {remaining}", total_len)
        return Deleted(total_len, bytes(data[offset + HEADER_LEN : offset + total_len])), total_len

    if kind == SKIPPER:
        if remaining < SKIPPER_LEN:
            raise ParseError(offset, f"{SKIPPER_LEN}-byte skipper", f"{remaining} bytes")
        if total_len < SKIPPER_LEN:
            raise ParseError(offset + 1, f"region length >= {SKIPPER_LEN}", total_len)
        if total_len > remaining:
            raise ParseError(offset + 1, f"region length <= {remaining}", total_len)
        west, south, east, north = _BOX.unpack_from(data, offset + HEADER_LEN)
        try:
            rec = Skipper(total_len, GeoPoint(west, south), GeoPoint(east, north))
        except RangeError as exc:
            raise ParseError(offset + HEADER_LEN, "bounding box in coordinate range", str(exc)) from None
        return rec, SKIPPER_LEN

    if kind == SIMPLE_POI:
        if total_len < SIMPLE_POI_MIN_LEN:
            raise ParseError(offset + 1, f"length >= {SIMPLE_POI_MIN_LEN}", total_len)
        if total_len > remaining:
            raise ParseError(offset + 1, f"length <= {remaining}", total_len)
        lon, lat = _POS.unpack_from(data, offset + HEADER_LEN)
        if not coordinate_in_range(lon, "lon"):
            raise ParseError(offset + 5, "longitude in range", lon)
        if not coordinate_in_range(lat, "lat"):
            raise ParseError(offset + 9, "latitude in range", lat)
        end = offset + total_len - 1
        if data[end] != 0:
            raise ParseError(end, "NUL name terminator", f"0x{data[end]:02X}")
        name = bytes(data[offset + 13 : end])
        nul = name.find(b"\x00")
        if nul != -1:
            raise ParseError(offset + 13 + nul, "non-NUL name byte", "0x00")
        return SimplePoi(GeoPoint(lon, lat), name, total_len), total_len

    if kind == EXTENDED_POI:
        if total_len < HEADER_LEN:
            raise ParseError(offset + 1, f"length >= {HEADER_LEN}", total_len)
        if total_len > remaining:
            raise ParseError(offset + 1, f"length <= {remaining}", total_len)
        return ExtendedPoi(total_len, bytes(data[offset + HEADER_LEN : offset + total_len])), total_len

    raise ParseError(offset, "record type 0-3", kind)


def _resync(data, start):
    """Next offset from ``start`` where a skipper or simple POI decodes cleanly."""
    # deleted and extended records carry no checkable structure, so never resync on them
    for pos in range(start, len(data)):
        if data[pos] not in (SKIPPER, SIMPLE_POI):
            continue
        if data[pos] == SIMPLE_POI:
            ok, _ = validate_simple_poi(data[pos : pos + MAX_CARVE_LEN])
            if not ok:
                continue
        try:
            _decode_record(data, pos)
        except ParseError:
            continue
        return pos
    return len(data)


def _parse_body(data, start, tolerant):
    records, offsets, gaps = [], [], []
    pos = start
    while pos < len(data):
        try:
            rec, consumed = _decode_record(data, pos)
        except ParseError as exc:
            if not tolerant:
                raise
            nxt = _resync(data, pos + 1)
            gaps.append(Gap(pos, bytes(data[pos:nxt]), str(exc)))
            pos = nxt
            continue
        records.append(rec)
        offsets.append(pos)
        pos += consumed
    return records, offsets, gaps


def parse_ov2(data: bytes, strictness: str = "strict", header_lengths=()) -> Ov2File:
    """Parse an ov2 byte string.

    Record parsing is tried at offset 0 first.  When that fails in strict
    mode, each candidate length in ``header_lengths`` (device profile header
    sizes) is tried in turn and the leading bytes are kept as an opaque header.
    In tolerant mode undecodable runs become :class:`Gap` spans and parsing
    resumes at the next structurally valid record.
    """
    if strictness not in ("strict", "tolerant"):
        raise ValueError(f"unknown strictness {strictness!r}")
    if not data:
        raise EmptyInput("ov2 input is empty")
    if not isinstance(data, (bytes, bytearray)):
        data = bytes(data)
    tolerant = strictness == "tolerant"

    try:
        records, offsets, gaps = _parse_body(data, 0, tolerant=False)
        return Ov2File(records, b"", offsets, gaps)
    except ParseError as first_error:
        for hlen in header_lengths:
            if 0 < hlen <= len(data):
                try:
                    records, offsets, gaps = _parse_body(data, hlen, tolerant=False)
                except ParseError:
                    continue
                return Ov2File(records, bytes(data[:hlen]), offsets, gaps)
        if not tolerant:
            raise first_error
    records, offsets, gaps = _parse_body(data, 0, tolerant=True)
    return Ov2File(records, b"", offsets, gaps)


def encode_record(rec, index=0) -> bytes:
    if isinstance(rec, SimplePoi):
        if b"\x00" in rec.name:
            raise ValidationError(index, "name", "interior NUL byte")
        expected = 13 + len(rec.name) + 1
        if rec.total_len != expected:
            raise ValidationError(index, "total_len", f"{rec.total_len} != {expected}")
        return _HDR.pack(SIMPLE_POI, rec.total_len) + _POS.pack(rec.pos.lon, rec.pos.lat) + rec.name + b"\x00"
    if isinstance(rec, Skipper):
        if rec.total_len < SKIPPER_LEN:
            raise ValidationError(index, "total_len", f"skipper region shorter than {SKIPPER_LEN}")
        return _HDR.pack(SKIPPER, rec.total_len) + _BOX.pack(
            rec.west_south.lon, rec.west_south.lat, rec.east_north.lon, rec.east_north.lat
        )
    if isinstance(rec, Deleted):
        if rec.total_len != HEADER_LEN + len(rec.filler):
            raise ValidationError(index, "total_len", "does not match filler length")
        return _HDR.pack(DELETED, rec.total_len) + rec.filler
    if isinstance(rec, ExtendedPoi):
        if rec.total_len != HEADER_LEN + len(rec.payload):
            raise ValidationError(index, "total_len", "does not match payload length")
        return _HDR.pack(EXTENDED_POI, rec.total_len) + rec.payload
    raise ValidationError(index, "kind", f"not an ov2 record: {type(rec).__name__}")


def serialize_ov2(ov2: Ov2File) -> bytes:
    """Emit ``ov2`` as bytes; gap spans are re-inserted at their offsets."""
    chunks = [(-1, ov2.header)]
    offsets = ov2.source_offsets if len(ov2.source_offsets) == len(ov2.records) else None
    for i, rec in enumerate(ov2.records):
        chunks.append((offsets[i] if offsets else i, encode_record(rec, i)))
    if ov2.gaps:
        if offsets is None:
            raise ValidationError(-1, "gaps", "gap spans need record source offsets")
        chunks.extend((g.offset, g.data) for g in ov2.gaps)
        chunks.sort(key=lambda c: c[0])
    return b"".join(c for _, c in chunks)


def _printable(b: int) -> bool:
    return 0x20 <= b <= 0x7E or b >= 0x80


def validate_simple_poi(window: bytes, max_len: int = MAX_CARVE_LEN):
    """Structural check of a candidate simple-POI record at the start of ``window``.

    Returns ``(True, None)`` or ``(False, reason)``.
    """
    if len(window) < SIMPLE_POI_MIN_LEN:
        return False, "window too short"
    if window[0] != SIMPLE_POI:
        return False, "type byte"
    kind, total_len, lon, lat = struct.unpack_from("<BIii", window, 0)
    if not SIMPLE_POI_MIN_LEN <= total_len <= max_len:
        return False, "length range"
    if total_len > len(window):
        return False, "truncated"
    if not coordinate_in_range(lon, "lon"):
        return False, "longitude range"
    if not coordinate_in_range(lat, "lat"):
        return False, "latitude range"
    if window[total_len - 1] != 0:
        return False, "terminator"
    for b in window[13 : total_len - 1]:
        if not _printable(b):
            return False, "name bytes"
    return True, None
