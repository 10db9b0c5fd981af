"""Parser for the base64 key-path XML stores of the TomTom Android app.

Both ``<Region>_<model>.xml`` (root ``MapSettings``) and
``NavkitSettings.xml`` are Android shared-preference files whose
``<string>`` elements look like::

    <string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00023*/Location_Line*00023*/LineRec_MaxSpeed*00023*">MA==</string>

The name is a slash-separated key path, each segment carrying a five-digit
record index between asterisks; the element text is base64.  Lines that
belong to one record are scattered through the file, so records are
rebuilt by grouping on the collection segment and its index.
"""

from __future__ import annotations

import base64
import binascii
import bisect
import re
from dataclasses import dataclass, field
from xml.sax.saxutils import unescape

from .errors import FormatError, MalformedStore
from .geo_time import GeoPoint

MAP_SETTINGS = "MapSettings"
NAVKIT_SETTINGS = "NavkitSettings"

CAVEAT_INDEX_MISMATCH = "segment indices disagree; collection index used"
CAVEAT_DUPLICATE_LEAF = "duplicate field in record; all values kept"

_SEGMENT_RE = re.compile(r"([^*/]+)\*(\d{5})\*")
_ELEMENT_START_RE = re.compile(r"<string(?=[\s/>])")
_ELEMENT_RE = re.compile(
    r"""<string\s+name\s*=\s*(?:"([^"]*)"|'([^']*)')\s*(?:/>|>([^<]*)</string\s*>)""",
    re.DOTALL,
)
_STORE_NAME_RE = re.compile(r"^([A-Za-z]+)_([0-9A-Fa-f]{8})\.xml$")
_POSITION_RE = re.compile(r"^\s*\(\s*(-?\d+)\s*;\s*(-?\d+)\s*\)?\s*$")
_XML_ENTITIES = {"&quot;": '"', "&apos;": "'"}


@dataclass(frozen=True)
class Segment:
    name: str
    index: int


@dataclass(frozen=True)
class KeyPath:
    segments: tuple

    @property
    def family(self) -> str:
        return self.segments[0].name

    @property
    def collection_pos(self) -> int:
        """Position of the segment that identifies one record.

        A record element is named after its container plus a suffix
        (``AddressRecents`` / ``AddressRecents_Address``).  Paths without
        that pattern are keyed on the first segment below the root.
        """
        segs = self.segments
        for i in range(2, len(segs)):
            if segs[i].name.startswith(segs[i - 1].name + "_"):
                return i
        return 1 if len(segs) > 1 else 0

    @property
    def collection(self) -> str:
        return self.segments[self.collection_pos].name

    @property
    def container(self) -> str:
        pos = self.collection_pos
        return self.segments[pos - 1].name if pos else ""

    @property
    def record_index(self) -> int:
        return self.segments[self.collection_pos].index

    @property
    def leaf(self) -> str:
        rest = self.segments[self.collection_pos + 1 :]
        if not rest:
            return self.collection
        return "/".join(s.name for s in rest)

    @property
    def indices_agree(self) -> bool:
        idx = self.record_index
        return all(s.index == idx for s in self.segments[self.collection_pos + 1 :])

    def __str__(self):
        return "/".join(f"{s.name}*{s.index:05d}*" for s in self.segments)


def parse_key_path(text: str) -> KeyPath:
    parts = text.split("/")
    segments = []
    for part in parts:
        m = _SEGMENT_RE.fullmatch(part)
        if not m:
            raise FormatError(text, f"bad key path segment {part!r}")
        segments.append(Segment(m.group(1), int(m.group(2))))
    return KeyPath(tuple(segments))


@dataclass(frozen=True)
class SettingsEntry:
    path: KeyPath
    raw_b64: str
    decoded: bytes
    source_line: int

    @property
    def text(self) -> str:
        return self.decoded.decode("utf-8", errors="replace")


@dataclass(frozen=True)
class MalformedEntry:
    source_line: int
    name: str
    raw: str
    reason: str


@dataclass
class StoreParse:
    entries: list = field(default_factory=list)
    malformed: list = field(default_factory=list)

    @property
    def families(self) -> set:
        return {e.path.family for e in self.entries}


def decode_b64(value: str) -> bytes:
    compact = "".join(value.split())
    return base64.b64decode(compact, validate=True)


def parse_store(xml_text: str, strict: bool = False) -> StoreParse:
    """Extract every ``<string name=...>`` element from ``xml_text``.

    The text need not be a well-formed document; carved fragments work.
    Elements whose key path or base64 value cannot be parsed come back as
    :class:`MalformedEntry` (or raise :class:`MalformedStore` when strict).
    """
    newlines = [m.start() for m in re.finditer("\n", xml_text)]
    out = StoreParse()

    def bad(line, name, raw, reason):
        if strict:
            raise MalformedStore(f"line {line}: {reason}")
        out.malformed.append(MalformedEntry(line, name, raw, reason))

    for start in _ELEMENT_START_RE.finditer(xml_text):
        pos = start.start()
        line = bisect.bisect_right(newlines, pos - 1) + 1
        m = _ELEMENT_RE.match(xml_text, pos)
        if not m:
            snippet = xml_text[pos : pos + 120].split("\n", 1)[0]
            bad(line, "", snippet, "malformed or unterminated element")
            continue
        name = unescape(m.group(1) if m.group(1) is not None else m.group(2), _XML_ENTITIES)
        raw = unescape(m.group(3) or "", _XML_ENTITIES).strip()
        try:
            path = parse_key_path(name)
        except FormatError as exc:
            bad(line, name, raw, str(exc))
            continue
        try:
            decoded = decode_b64(raw)
        except (binascii.Error, ValueError) as exc:
            bad(line, name, raw, f"base64: {exc}")
            continue
        out.entries.append(SettingsEntry(path, raw, decoded, line))
    return out


def store_model_id(filename: str):
    """``Benelux_AF7DE92B.xml`` -> ``("Benelux", "AF7DE92B")``, else None."""
    m = _STORE_NAME_RE.match(filename)
    return (m.group(1), m.group(2)) if m else None


@dataclass
class RecordGroup:
    family: str
    collection: str
    record_index: int
    container: str = ""
    fields: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)
    caveats: list = field(default_factory=list)

    def get(self, name, default=None):
        """Value of the leaf whose last path component is ``name``.

        Multi-valued leaves return their last value by source line.
        """
        for leaf, value in self.fields.items():
            if leaf == name or leaf.rsplit("/", 1)[-1] == name:
                return value[-1] if isinstance(value, list) else value
        return default

    @property
    def source_lines(self) -> list:
        return [e.source_line for e in self.entries]


def group_records(entries) -> list:
    buckets = {}
    for e in sorted(entries, key=lambda e: (e.source_line, str(e.path), e.raw_b64)):
        key = (e.path.family, e.path.container, e.path.collection, e.path.record_index)
        buckets.setdefault(key, []).append(e)

    groups = []
    for (family, container, collection, index), members in buckets.items():
        g = RecordGroup(family, collection, index, container, entries=members)
        values = {}
        for e in members:
            values.setdefault(e.path.leaf, []).append(e.text)
            if not e.path.indices_agree and CAVEAT_INDEX_MISMATCH not in g.caveats:
                g.caveats.append(CAVEAT_INDEX_MISMATCH)
        for leaf, vals in values.items():
            if len(vals) > 1:
                g.fields[leaf] = vals
                if CAVEAT_DUPLICATE_LEAF not in g.caveats:
                    g.caveats.append(CAVEAT_DUPLICATE_LEAF)
            else:
                g.fields[leaf] = vals[0]
        groups.append(g)
    groups.sort(key=lambda g: (g.family, g.container, g.collection, g.record_index))
    return groups


def parse_position_pair(decoded: str) -> tuple:
    """Integers of a ``"(X; Y"`` string, without range checks."""
    m = _POSITION_RE.match(decoded)
    if not m:
        raise FormatError(decoded, "position is not '(X; Y'")
    return int(m.group(1)), int(m.group(2))


def parse_position_string(decoded: str) -> GeoPoint:
    """``"(471308; 5201816"`` -> GeoPoint(lon=471308, lat=5201816).

    The closing parenthesis is optional.
    """
    return GeoPoint(*parse_position_pair(decoded))
