import pytest
from hypothesis import given, strategies as st

from tomtom_forensics.errors import EmptyInput, ParseError, ValidationError
from tomtom_forensics.geo_time import LAT_BOUND, LON_BOUND, GeoPoint
from tomtom_forensics.ov2 import (
    SEEK_PATTERN,
    Deleted,
    ExtendedPoi,
    Ov2File,
    SimplePoi,
    Skipper,
    encode_record,
    parse_ov2,
    serialize_ov2,
    validate_simple_poi,
)
from oracles import simple_poi_bytes, skipper_bytes

GOUDA = "Ridder Dirkstraat - Sophiastraat, Gouda"
GOLDEN_OV2 = bytes.fromhex("02 35 00 00 00 C2 33 07 00 4F 60 4F 00") + GOUDA.encode("ascii") + b"\x00"

points = st.builds(GeoPoint, st.integers(-LON_BOUND, LON_BOUND), st.integers(-LAT_BOUND, LAT_BOUND))
names = st.binary(max_size=200).filter(lambda b: b"\x00" not in b)
simple = st.builds(SimplePoi, points, names)
skipper = st.builds(lambda a, b, extra: Skipper(21 + extra, a, b), points, points, st.just(0))
deleted = st.binary(max_size=40).map(lambda f: Deleted(5 + len(f), f))
extended = st.binary(max_size=40).map(lambda p: ExtendedPoi(5 + len(p), p))


def test_golden_record_layout_from_oracle():
    assert simple_poi_bytes(472002, 5201999, GOUDA) == GOLDEN_OV2
    assert len(GOLDEN_OV2) == 53


def test_golden_record_roundtrip():
    ov2 = parse_ov2(GOLDEN_OV2)
    (rec,) = ov2.records
    assert rec == SimplePoi(GeoPoint(472002, 5201999), GOUDA.encode(), 53)
    assert rec.text == GOUDA
    assert serialize_ov2(ov2) == GOLDEN_OV2


def test_mixed_records():
    data = (
        skipper_bytes(21 + 53, 400000, 5100000, 500000, 5300000)
        + GOLDEN_OV2
        + bytes([0]) + (8).to_bytes(4, "little") + b"abc"
        + bytes([3]) + (7).to_bytes(4, "little") + b"xy"
    )
    ov2 = parse_ov2(data)
    assert [r.kind for r in ov2.records] == ["skipper", "simple_poi", "deleted", "extended_poi"]
    assert ov2.source_offsets == [0, 21, 74, 82]
    sk = ov2.records[0]
    assert sk.total_len == 74 and sk.west_south == GeoPoint(400000, 5100000)
    assert serialize_ov2(ov2) == data


def test_empty_input():
    with pytest.raises(EmptyInput):
        parse_ov2(b"")


def test_truncated_length_reports_offset():
    bad = GOLDEN_OV2[:-1]
    with pytest.raises(ParseError) as info:
        parse_ov2(bad)
    assert info.value.offset == 1


def test_out_of_range_coordinate():
    bad = simple_poi_bytes(0, LAT_BOUND + 1, "x")
    with pytest.raises(ParseError) as info:
        parse_ov2(bad)
    assert info.value.offset == 9


def test_unknown_type_byte():
    with pytest.raises(ParseError) as info:
        parse_ov2(GOLDEN_OV2 + b"\x07\x00\x00\x00\x00")
    assert info.value.offset == 53


def test_tolerant_mode_keeps_gap_bytes():
    junk = b"\xff\xee\x07\x09"
    data = GOLDEN_OV2 + junk + GOLDEN_OV2
    with pytest.raises(ParseError):
        parse_ov2(data)
    ov2 = parse_ov2(data, "tolerant")
    assert len(ov2.records) == 2
    assert [(g.offset, g.data) for g in ov2.gaps] == [(53, junk)]
    assert serialize_ov2(ov2) == data


def test_header_profile():
    header = b"\xde\xad\xbe\xef\x01\x02"
    data = header + GOLDEN_OV2
    ov2 = parse_ov2(data, header_lengths=(6,))
    assert ov2.header == header and len(ov2.records) == 1
    assert serialize_ov2(ov2) == data


def test_encode_rejects_inconsistent_records():
    with pytest.raises(ValidationError):
        encode_record(SimplePoi(GeoPoint(0, 0), b"a\x00b"))
    with pytest.raises(ValidationError):
        encode_record(SimplePoi(GeoPoint(0, 0), b"ab", 99), index=4)
    with pytest.raises(ValidationError):
        encode_record(Skipper(5, GeoPoint(0, 0), GeoPoint(1, 1)))
    with pytest.raises(ValidationError):
        encode_record("not a record")


@given(st.lists(st.one_of(simple, skipper, deleted, extended), min_size=1, max_size=12))
def test_roundtrip_property(records):
    data = serialize_ov2(Ov2File(records))
    back = parse_ov2(data)
    assert back.records == records
    assert serialize_ov2(back) == data


@given(simple)
def test_simple_poi_length_rule(rec):
    assert len(encode_record(rec)) == rec.total_len == 13 + len(rec.name) + 1


@given(points, st.text(st.characters(min_codepoint=0x20, max_codepoint=0x7E), max_size=100))
def test_validator_accepts_printable_names(p, name):
    ok, reason = validate_simple_poi(simple_poi_bytes(p.lon, p.lat, name))
    assert ok, reason


@pytest.mark.parametrize("window,reason", [
    (b"\x02" * 5, "window too short"),
    (b"\x03" + GOLDEN_OV2[1:], "type byte"),
    (b"\x02\x0d\x00\x00\x00" + bytes(9), "length range"),
    (GOLDEN_OV2[:30], "truncated"),
    (simple_poi_bytes(LON_BOUND + 1, 0, "ab"), "longitude range"),
    (simple_poi_bytes(0, -LAT_BOUND - 1, "ab"), "latitude range"),
    (GOLDEN_OV2[:-1] + b"!", "terminator"),
    (simple_poi_bytes(0, 0, b"a\x01b"), "name bytes"),
])
def test_validator_reasons(window, reason):
    assert validate_simple_poi(window) == (False, reason)


def test_seek_pattern():
    hit = b"\x64\x15\x00\x00\x00\x11\x22\x33\x44" + bytes(5) + b"\x80\x00\x07" + bytes(4)
    assert SEEK_PATTERN.fullmatch(hit)
    assert not SEEK_PATTERN.search(hit.replace(b"\x11", b"\x00"))
    assert not SEEK_PATTERN.search(hit.replace(b"\x07", b"\xff"))
