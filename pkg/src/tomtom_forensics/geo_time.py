"""Coordinate and timestamp primitives.

Coordinates are stored on disk as signed 32-bit integers in degrees x 10^5
(``CoordinateE5``).  Times come in several flavours: seconds since the Unix
epoch, minutes since the epoch (docking), and server-side times that are
known to be skewed by one month and one day.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from typing import NamedTuple

from dateutil.relativedelta import relativedelta

from .errors import RangeError

SCALE = 100_000
LON_BOUND = 18_000_000
LAT_BOUND = 9_000_000
INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1
INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1
MAX_CLOCK_OFFSET = 50_400
ARRIVAL_UNSET = 86_401
SECONDS_PER_DAY = 86_400

EPOCH_TAG = "unix-assumed"
DATUM_TAG = "WGS84-assumed"

CAVEAT_DEVICE_CLOCK = "device clock, may be wrong"
CAVEAT_UNKNOWN_BASIS = "time basis unknown"
CAVEAT_SERVER_SKEW = "server time observed off by one month and one day; both candidates listed"
CAVEAT_ODD_HALVING = "odd raw value halved with floor division; 1e-5 degree precision lost"
CAVEAT_ARRIVAL_OUT_OF_RANGE = "arrival time outside a day; treated as unset"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_Q5 = Decimal("0.00001")


class Axis(str, enum.Enum):
    LON = "lon"
    LAT = "lat"


def _bound(axis):
    return LON_BOUND if Axis(axis) is Axis.LON else LAT_BOUND


def check_coordinate(value, axis):
    """Raise RangeError unless ``value`` is a legal CoordinateE5 on ``axis``."""
    axis = Axis(axis)
    bound = _bound(axis)
    if not isinstance(value, int) or isinstance(value, bool):
        raise RangeError(f"{axis.value} coordinate must be an integer, got {value!r}")
    if not -bound <= value <= bound:
        raise RangeError(f"{axis.value} coordinate {value} outside [-{bound}, {bound}]")
    return value


def coordinate_in_range(value, axis) -> bool:
    bound = _bound(axis)
    return -bound <= value <= bound


def decode_coordinate(value: int, axis) -> Decimal:
    """Convert a CoordinateE5 to decimal degrees with exactly five decimals.

    >>> decode_coordinate(472002, "lon")
    Decimal('4.72002')
    """
    check_coordinate(value, axis)
    return (Decimal(value) / SCALE).quantize(_Q5)


def format_degrees(value: int, axis) -> str:
    return str(decode_coordinate(value, axis))


def parse_degrees(text: str) -> int:
    """Inverse of :func:`format_degrees` at five-digit precision."""
    return int((Decimal(text) * SCALE).to_integral_value())


class Halved(NamedTuple):
    value: int
    caveats: tuple


def halve_poi_coordinate(raw: int) -> Halved:
    # LastSelectedPoiData stores coordinates doubled
    caveats = (CAVEAT_ODD_HALVING,) if raw % 2 else ()
    return Halved(raw // 2, caveats)


@dataclass(frozen=True)
class GeoPoint:
    lon: int
    lat: int

    def __post_init__(self):
        check_coordinate(self.lon, Axis.LON)
        check_coordinate(self.lat, Axis.LAT)

    @property
    def lon_deg(self) -> Decimal:
        return decode_coordinate(self.lon, Axis.LON)

    @property
    def lat_deg(self) -> Decimal:
        return decode_coordinate(self.lat, Axis.LAT)


class TimeUnit(str, enum.Enum):
    SECONDS = "seconds"
    MINUTES = "minutes"


class TimeBasis(str, enum.Enum):
    DEVICE_CLOCK = "device_clock"
    SERVER_CLOCK = "server_clock"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TimestampSpec:
    raw: int
    unit: TimeUnit = TimeUnit.SECONDS
    basis: TimeBasis = TimeBasis.UNKNOWN
    anomaly_flag: bool = False

    def __post_init__(self):
        object.__setattr__(self, "unit", TimeUnit(self.unit))
        object.__setattr__(self, "basis", TimeBasis(self.basis))
        if not INT64_MIN <= self.raw <= INT64_MAX:
            raise RangeError(f"raw timestamp {self.raw} does not fit in 64 bits")
        if self.anomaly_flag and self.basis is not TimeBasis.SERVER_CLOCK:
            raise ValueError("anomaly_flag requires basis=server_clock")


@dataclass(frozen=True)
class TimeCandidate:
    label: str
    seconds: int
    utc: str


@dataclass(frozen=True)
class NormalizedTime:
    seconds: int
    utc: str
    alternatives: tuple = ()
    caveats: tuple = ()
    epoch: str = EPOCH_TAG


def utc_iso(seconds: int) -> str:
    try:
        moment = _EPOCH + timedelta(seconds=seconds)
    except OverflowError as exc:
        raise RangeError(f"{seconds} s cannot be rendered as a calendar date") from exc
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def subtract_month_and_day(seconds: int) -> int:
    """Shift a Unix time back one calendar month, then one day.

    Month subtraction clamps to the last day of the shorter month
    (31 May -> 30 April), and the day is taken off afterwards.
    """
    try:
        moment = _EPOCH + timedelta(seconds=seconds)
        shifted = moment - relativedelta(months=1) - timedelta(days=1)
    except (OverflowError, ValueError) as exc:
        raise RangeError(f"{seconds} s cannot be shifted by a calendar month") from exc
    return int((shifted - _EPOCH).total_seconds())


def normalize_timestamp(spec: TimestampSpec) -> NormalizedTime:
    seconds = spec.raw * 60 if spec.unit is TimeUnit.MINUTES else spec.raw
    if not INT64_MIN <= seconds <= INT64_MAX:
        raise RangeError(f"normalised value of {spec.raw} {spec.unit.value} overflows 64 bits")
    utc = utc_iso(seconds)

    caveats = []
    alternatives = ()
    if spec.basis is TimeBasis.DEVICE_CLOCK:
        caveats.append(CAVEAT_DEVICE_CLOCK)
    elif spec.basis is TimeBasis.UNKNOWN:
        caveats.append(CAVEAT_UNKNOWN_BASIS)
    if spec.anomaly_flag:
        adjusted = subtract_month_and_day(seconds)
        alternatives = (
            TimeCandidate("as_stored", seconds, utc),
            TimeCandidate("minus_one_month_one_day", adjusted, utc_iso(adjusted)),
        )
        caveats.append(CAVEAT_SERVER_SKEW)
    return NormalizedTime(seconds, utc, alternatives, tuple(caveats))


@dataclass(frozen=True)
class ClockOffset:
    seconds: int

    def __post_init__(self):
        if abs(self.seconds) > MAX_CLOCK_OFFSET:
            raise RangeError(f"clock offset {self.seconds} s exceeds +/-{MAX_CLOCK_OFFSET} s")

    def render(self) -> str:
        sign = "-" if self.seconds < 0 else "+"
        hours, rest = divmod(abs(self.seconds), 3600)
        minutes, secs = divmod(rest, 60)
        return f"{sign}{hours:02d}:{minutes:02d}:{secs:02d}"


def decode_user_time_offset(value: int) -> ClockOffset:
    """7259 -> ClockOffset(7259), rendered "+02:00:59"."""
    return ClockOffset(value)


@dataclass(frozen=True)
class ArrivalTime:
    raw: int
    seconds_of_day: int | None = None
    caveats: tuple = field(default=())

    @property
    def is_unset(self) -> bool:
        return self.seconds_of_day is None


def decode_arrival_time(value: int) -> ArrivalTime:
    if value == ARRIVAL_UNSET:
        return ArrivalTime(value)
    if 0 <= value <= SECONDS_PER_DAY:
        return ArrivalTime(value, value)
    return ArrivalTime(value, None, (CAVEAT_ARRIVAL_OUT_OF_RANGE,))
