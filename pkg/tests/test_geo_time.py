from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from tomtom_forensics.errors import RangeError
from tomtom_forensics.geo_time import (
    ARRIVAL_UNSET,
    CAVEAT_DEVICE_CLOCK,
    CAVEAT_ODD_HALVING,
    CAVEAT_SERVER_SKEW,
    CAVEAT_UNKNOWN_BASIS,
    EPOCH_TAG,
    LAT_BOUND,
    LON_BOUND,
    GeoPoint,
    TimeBasis,
    TimestampSpec,
    TimeUnit,
    decode_arrival_time,
    decode_coordinate,
    decode_user_time_offset,
    format_degrees,
    halve_poi_coordinate,
    normalize_timestamp,
    parse_degrees,
    subtract_month_and_day,
    utc_iso,
)
from oracles import iso_utc, minus_month_then_day, unix_from_civil

lons = st.integers(-LON_BOUND, LON_BOUND)
lats = st.integers(-LAT_BOUND, LAT_BOUND)
# 1900 .. 2200, inside what datetime can render
plausible_seconds = st.integers(-2_208_988_800, 7_258_118_400)


def test_decode_coordinate_examples():
    assert decode_coordinate(472002, "lon") == Decimal("4.72002")
    assert decode_coordinate(5201999, "lat") == Decimal("52.01999")
    assert format_degrees(-5, "lon") == "-0.00005"
    assert format_degrees(0, "lat") == "0.00000"
    assert format_degrees(LON_BOUND, "lon") == "180.00000"


@pytest.mark.parametrize("value,axis", [(LON_BOUND + 1, "lon"), (-LAT_BOUND - 1, "lat"), (2**31 - 1, "lat")])
def test_out_of_range_rejected(value, axis):
    with pytest.raises(RangeError):
        decode_coordinate(value, axis)


def test_geopoint_validates():
    with pytest.raises(RangeError):
        GeoPoint(0, LAT_BOUND + 1)
    with pytest.raises(RangeError):
        GeoPoint(True, 0)
    p = GeoPoint(471308, 5201816)
    assert (p.lon_deg, p.lat_deg) == (Decimal("4.71308"), Decimal("52.01816"))


@given(lons)
def test_degrees_roundtrip_lon(v):
    assert parse_degrees(format_degrees(v, "lon")) == v


@given(lats)
def test_degrees_roundtrip_lat(v):
    s = format_degrees(v, "lat")
    assert parse_degrees(s) == v
    assert len(s.split(".")[1]) == 5


@given(st.integers(-2 * LAT_BOUND, 2 * LAT_BOUND))
def test_halving(raw):
    h = halve_poi_coordinate(raw)
    assert h.value == raw // 2
    assert (CAVEAT_ODD_HALVING in h.caveats) == bool(raw % 2)


@given(st.integers(-(2**40), 2**40))
def test_halving_even_is_exact(k):
    h = halve_poi_coordinate(2 * k)
    assert h.value == k and h.caveats == ()


def test_user_time_offset_render():
    assert decode_user_time_offset(7259).render() == "+02:00:59"
    assert decode_user_time_offset(0).render() == "+00:00:00"
    assert decode_user_time_offset(-3600).render() == "-01:00:00"
    assert decode_user_time_offset(50400).render() == "+14:00:00"
    with pytest.raises(RangeError):
        decode_user_time_offset(50401)


def test_arrival_time():
    assert decode_arrival_time(ARRIVAL_UNSET).is_unset
    assert decode_arrival_time(86401).raw == 86401
    a = decode_arrival_time(3600)
    assert not a.is_unset and a.seconds_of_day == 3600
    odd = decode_arrival_time(90000)
    assert odd.is_unset and odd.caveats


def test_minutes_normalised():
    n = normalize_timestamp(TimestampSpec(22_833_333, TimeUnit.MINUTES, TimeBasis.DEVICE_CLOCK))
    assert n.seconds == 22_833_333 * 60
    assert n.utc == iso_utc(22_833_333 * 60)
    assert n.caveats == (CAVEAT_DEVICE_CLOCK,)
    assert n.epoch == EPOCH_TAG


def test_server_clock_anomaly_pair():
    n = normalize_timestamp(TimestampSpec(1_370_000_000, basis=TimeBasis.SERVER_CLOCK, anomaly_flag=True))
    assert n.utc == "2013-05-31T11:33:20Z"
    assert [(a.label, a.utc) for a in n.alternatives] == [
        ("as_stored", "2013-05-31T11:33:20Z"),
        ("minus_one_month_one_day", "2013-04-29T11:33:20Z"),
    ]
    assert CAVEAT_SERVER_SKEW in n.caveats


def test_month_shift_edges():
    # 31 March 2013 -> 28 Feb (clamped) -> 27 Feb
    assert utc_iso(subtract_month_and_day(unix_from_civil(2013, 3, 31))) == "2013-02-27T00:00:00Z"
    # leap year
    assert utc_iso(subtract_month_and_day(unix_from_civil(2012, 3, 30))) == "2012-02-28T00:00:00Z"
    # across a year boundary
    assert utc_iso(subtract_month_and_day(unix_from_civil(2013, 1, 1, 5))) == "2012-11-30T00:00:05Z"


@given(plausible_seconds)
def test_month_shift_matches_oracle(seconds):
    assert subtract_month_and_day(seconds) == minus_month_then_day(seconds)
    assert utc_iso(seconds) == iso_utc(seconds)


def test_anomaly_requires_server_clock():
    with pytest.raises(ValueError):
        TimestampSpec(0, basis=TimeBasis.DEVICE_CLOCK, anomaly_flag=True)


def test_unknown_basis_caveat():
    assert normalize_timestamp(TimestampSpec(0)).caveats == (CAVEAT_UNKNOWN_BASIS,)


def test_overflow():
    with pytest.raises(RangeError):
        TimestampSpec(2**63)
    with pytest.raises(RangeError):
        normalize_timestamp(TimestampSpec(2**62, TimeUnit.MINUTES))
    with pytest.raises(RangeError):
        normalize_timestamp(TimestampSpec(2**40))


@given(st.integers(0, 2**31))
def test_normalize_is_pure(raw):
    spec = TimestampSpec(raw, TimeUnit.MINUTES, TimeBasis.DEVICE_CLOCK)
    assert normalize_timestamp(spec) == normalize_timestamp(spec)
