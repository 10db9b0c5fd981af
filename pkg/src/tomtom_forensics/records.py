"""Typed forensic records assembled from settings-store record groups.

The Benelux/MapSettings store yields recent destinations, entered
addresses, routes, last selected POI/search item and the last known GPS
position.  NavkitSettings yields home locations, paid subscriptions, the
last docked position/time, clock offset, arrival time and local search
history.  Leaves that no typed field claims are kept in ``raw`` so nothing
read from disk is dropped.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import FormatError, NotPresent, RangeError
from .geo_time import (
    GeoPoint,
    TimeBasis,
    TimestampSpec,
    TimeUnit,
    check_coordinate,
    decode_arrival_time,
    decode_user_time_offset,
    halve_poi_coordinate,
    normalize_timestamp,
)
from .settings_xml import RecordGroup, parse_position_pair

CAVEAT_VISITED = "visited at some point"
CAVEAT_POS_UNPARSEABLE = "position unparseable"
CAVEAT_EXPERIMENTAL = "experimental: decoded with the standard location layout"
CAVEAT_MAYBE_LAST_KNOWN = "may be last known position if no GPS lock"
CAVEAT_NO_DEPARTURE_TIME = "no departure time"
CAVEAT_NO_DESTINATION = "no destination"
CAVEAT_NO_DEPARTURE = "no departure location"
CAVEAT_NO_GPS_TIME = "no GPS time stored"
CAVEAT_PARTIAL_POINT = "only one axis present"
CAVEAT_HOME_TIE = "home index repeated; later file position taken as current"
CAVEAT_TIME_UNPARSEABLE = "time value unparseable"
CAVEAT_HALVED = "coordinates stored doubled; halved"
CAVEAT_UNCHANGEABLE = "value not user-changeable in the observed app version"

REMINDER_KEYS = (
    "MapUpdateLastReminderDate",
    "LastMapShareConnectionReminder",
    "LMGDisplayDate",
    "LastMapShareSubscriptionReminder",
    "LastTimeTempBTEnabled",
)

_INT_RE = re.compile(r"^\s*(-?\d+)\s*$")


class LocType(str, enum.Enum):
    MAPTICK = "MAPTICK"
    ADDRESS = "ADDRESS"
    HOME = "HOME"
    POI = "POI"
    UNDEFINED = "UNDEFINED"
    FAVOURITE = "FAVOURITE"
    GPS = "GPS"
    UNKNOWN = "UNKNOWN"


def parse_loc_type(text):
    """Map a ``LOCTYP_*`` string to LocType; anything else is UNKNOWN."""
    if text is None:
        return LocType.UNDEFINED
    t = text.strip()
    if t.upper().startswith("LOCTYP_"):
        try:
            return LocType(t[7:].upper())
        except ValueError:
            pass
    return LocType.UNKNOWN


class Origin(str, enum.Enum):
    ENGINE_RECENTS = "EngineRecents"
    ADDRESS_RECENTS = "AddressRecents"
    LAST_SELECTED_POI = "LastSelectedPoi"
    LAST_SELECTED_SEARCH_ITEM = "LastSelectedSearchItem"
    REGULAR_ROUTE_HOME = "RegularRouteLocHome"
    REGULAR_ROUTE_WORK = "RegularRouteLocWork"
    HOME_LOCATION = "HomeLocation"
    ROUTE_STREAM_ENDPOINT = "RouteStreamEndpoint"
    OV2_FAVOURITE = "Ov2Favourite"


@dataclass(frozen=True)
class Provenance:
    file: str = ""
    lines: tuple = ()
    offset: int | None = None


def _provenance(group, source):
    return Provenance(source, tuple(sorted(group.source_lines)))


@dataclass(frozen=True)
class Timestamp:
    spec: TimestampSpec
    normalized: object = None
    error: str | None = None


def stamp(raw, unit=TimeUnit.SECONDS, basis=TimeBasis.UNKNOWN, anomaly=False) -> Timestamp:
    spec = TimestampSpec(raw, unit, basis, anomaly)
    try:
        return Timestamp(spec, normalize_timestamp(spec))
    except RangeError as exc:
        return Timestamp(spec, None, str(exc))


def _parse_int(text):
    if text is None:
        return None
    m = _INT_RE.match(text)
    return int(m.group(1)) if m else None


@dataclass
class LocationRecord:
    origin: Origin
    record_index: int = 0
    user_name: str | None = None
    pos: GeoPoint | None = None
    pos_shape: str | None = None
    loc_name: str | None = None
    loc_type: LocType = LocType.UNDEFINED
    loc_type_raw: str | None = None
    city: str | None = None
    house_number: str | None = None
    raw: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)
    source: Provenance = field(default_factory=Provenance)

    def add_caveat(self, text):
        if text not in self.caveats:
            self.caveats.append(text)


_LOCATION_TEXT_LEAVES = {
    "Location_UserName": "user_name",
    "Location_LocName": "loc_name",
    "Location_CityName": "city",
    "HouseNumber_Number": "house_number",
}
_POS_LEAF = "Location_UserPos"
_POS_X_LEAF = "Location_UserPosX"
_POS_Y_LEAF = "Location_UserPosY"
_LOCTYPE_LEAF = "Location_LocType"


def _last(value):
    return value[-1] if isinstance(value, list) else value


def _location_from_fields(fields, origin, record_index, halve, caveats, source):
    rec = LocationRecord(origin, record_index, source=source)
    for c in caveats:
        rec.add_caveat(c)
    pos_string = pos_x = pos_y = None

    for leaf, value in fields.items():
        name = leaf.rsplit("/", 1)[-1]
        if name in _LOCATION_TEXT_LEAVES:
            setattr(rec, _LOCATION_TEXT_LEAVES[name], _last(value))
        elif name == _LOCTYPE_LEAF:
            rec.loc_type_raw = _last(value)
            rec.loc_type = parse_loc_type(rec.loc_type_raw)
        elif name == _POS_LEAF:
            pos_string = (leaf, _last(value))
        elif name == _POS_X_LEAF:
            pos_x = (leaf, _last(value))
        elif name == _POS_Y_LEAF:
            pos_y = (leaf, _last(value))
        else:
            rec.raw[leaf] = value

    xy = None
    if pos_string is not None:
        try:
            xy = parse_position_pair(pos_string[1])
            rec.pos_shape = "string"
        except FormatError:
            rec.raw[pos_string[0]] = pos_string[1]
            rec.add_caveat(CAVEAT_POS_UNPARSEABLE)
    elif pos_x is not None or pos_y is not None:
        x = _parse_int(pos_x[1]) if pos_x else None
        y = _parse_int(pos_y[1]) if pos_y else None
        if x is None or y is None:
            for p in (pos_x, pos_y):
                if p is not None:
                    rec.raw[p[0]] = p[1]
            rec.add_caveat(CAVEAT_POS_UNPARSEABLE)
        else:
            xy = (x, y)
            rec.pos_shape = "split"

    if xy is not None:
        if halve:
            hx, hy = halve_poi_coordinate(xy[0]), halve_poi_coordinate(xy[1])
            xy = (hx.value, hy.value)
            rec.add_caveat(CAVEAT_HALVED)
            for c in hx.caveats + hy.caveats:
                rec.add_caveat(c)
        try:
            rec.pos = GeoPoint(*xy)
        except RangeError:
            leaf = pos_string[0] if pos_string else (pos_x or pos_y)[0]
            rec.raw[leaf] = pos_string[1] if pos_string else f"({xy[0]}; {xy[1]}"
            rec.pos_shape = None
            rec.add_caveat(CAVEAT_POS_UNPARSEABLE)

    if rec.loc_type is LocType.GPS:
        rec.add_caveat(CAVEAT_VISITED)
    return rec


def assemble_location(group: RecordGroup, origin, source: str = "", halve=None) -> LocationRecord:
    """Build a LocationRecord from one record group.

    ``halve`` defaults to True for ``LastSelectedPoiData`` groups, whose
    coordinates are stored at twice the usual scale.
    """
    origin = Origin(origin)
    if halve is None:
        halve = origin is Origin.LAST_SELECTED_POI and group.collection == "LastSelectedPoiData"
    return _location_from_fields(
        group.fields, origin, group.record_index, halve, group.caveats, _provenance(group, source)
    )


@dataclass(frozen=True)
class HomeSelection:
    current: LocationRecord | None
    history: tuple = ()
    caveats: tuple = ()

    @property
    def is_none(self) -> bool:
        return self.current is None


NO_HOME = HomeSelection(None)


def select_home_location(homes) -> HomeSelection:
    """Highest index is the current home; the rest are history in index order.

    Returns :data:`NO_HOME` for an empty input.
    """
    homes = list(homes)
    if not homes:
        return NO_HOME

    def key(item):
        idx, rec = item
        lines = rec.source.lines if isinstance(rec, LocationRecord) else ()
        return (idx, max(lines, default=-1))

    ordered = sorted(homes, key=key)
    indices = [i for i, _ in ordered]
    caveats = (CAVEAT_HOME_TIE,) if len(set(indices)) != len(indices) else ()
    return HomeSelection(ordered[-1][1], tuple(r for _, r in ordered[:-1]), caveats)


@dataclass
class RouteStreamRecord:
    departure: LocationRecord | None
    destination: LocationRecord | None
    departure_time: Timestamp | None
    record_index: int = 0
    raw: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)
    source: Provenance = field(default_factory=Provenance)


def _split_endpoint(fields, marker):
    sub = {}
    for leaf, value in fields.items():
        head, _, rest = leaf.partition("/")
        if rest and head.endswith(marker):
            sub[rest] = value
    return sub


def assemble_route_stream(group: RecordGroup, source: str = "") -> RouteStreamRecord:
    prov = _provenance(group, source)
    dep_fields = _split_endpoint(group.fields, "Departure")
    dst_fields = _split_endpoint(group.fields, "Destination")
    caveats = list(group.caveats)
    raw = {}
    time_value = None
    for leaf, value in group.fields.items():
        head, _, rest = leaf.partition("/")
        if rest and (head.endswith("Departure") or head.endswith("Destination")):
            continue
        if leaf.rsplit("/", 1)[-1].endswith("DepartureTime"):
            time_value = (leaf, _last(value))
        else:
            raw[leaf] = value

    departure = destination = None
    if dep_fields:
        departure = _location_from_fields(
            dep_fields, Origin.ROUTE_STREAM_ENDPOINT, group.record_index, False, (), prov
        )
    else:
        caveats.append(CAVEAT_NO_DEPARTURE)
    if dst_fields:
        destination = _location_from_fields(
            dst_fields, Origin.ROUTE_STREAM_ENDPOINT, group.record_index, False, (), prov
        )
    else:
        caveats.append(CAVEAT_NO_DESTINATION)

    departure_time = None
    if time_value is None:
        caveats.append(CAVEAT_NO_DEPARTURE_TIME)
    else:
        secs = _parse_int(time_value[1])
        if secs is None:
            raw[time_value[0]] = time_value[1]
            caveats.append(CAVEAT_TIME_UNPARSEABLE)
        else:
            departure_time = stamp(secs, TimeUnit.SECONDS, TimeBasis.DEVICE_CLOCK)
    if departure is not None and departure.loc_type is LocType.GPS:
        caveats.append(CAVEAT_MAYBE_LAST_KNOWN)
    return RouteStreamRecord(departure, destination, departure_time, group.record_index, raw, caveats, prov)


@dataclass
class LastKnownGps:
    lon: int | None
    lat: int | None
    caveats: list = field(default_factory=list)
    source: Provenance = field(default_factory=Provenance)

    @property
    def point(self) -> GeoPoint | None:
        if self.lon is None or self.lat is None:
            return None
        return GeoPoint(self.lon, self.lat)


def _axis_value(group, axis):
    if group is None:
        return None, None
    text = group.get(group.collection)
    if text is None and group.fields:
        text = _last(next(iter(group.fields.values())))
    value = _parse_int(text)
    if value is None:
        return None, text
    try:
        check_coordinate(value, axis)
    except RangeError:
        return None, text
    return value, text


def assemble_last_known_gps(x_group, y_group, source: str = "") -> LastKnownGps:
    """Last known GPS fix from the PosX / PosY scalar groups.

    Raises NotPresent when neither axis is stored.
    """
    if x_group is None and y_group is None:
        raise NotPresent("no LastKnownTrueGpsPos values")
    lon, lon_text = _axis_value(x_group, "lon")
    lat, lat_text = _axis_value(y_group, "lat")
    caveats = [CAVEAT_NO_GPS_TIME]
    if lon is None or lat is None:
        caveats.append(CAVEAT_PARTIAL_POINT)
        if (x_group is not None and lon is None) or (y_group is not None and lat is None):
            caveats.append(CAVEAT_POS_UNPARSEABLE)
    lines = tuple(sorted((x_group.source_lines if x_group else []) + (y_group.source_lines if y_group else [])))
    return LastKnownGps(lon, lat, caveats, Provenance(source, lines))


@dataclass
class SubscriptionRecord:
    service: str | None
    start: Timestamp | None = None
    end: Timestamp | None = None
    username: str | None = None
    password: str | None = None
    last_valid: Timestamp | None = None
    last_connection: Timestamp | None = None
    account_date_last_update: Timestamp | None = None
    record_index: int = 0
    raw: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)
    source: Provenance = field(default_factory=Provenance)


_SERVER_TIME_LEAVES = {
    "lastvalidtime": "last_valid",
    "lastconnectiontime": "last_connection",
    "datelastupdate": "account_date_last_update",
}


def _account_fields(group):
    """Username, password and the three server-clock times of an account group."""
    out, raw, caveats = {}, {}, []
    for leaf, value in group.fields.items():
        name = leaf.rsplit("/", 1)[-1]
        low = name.lower()
        text = _last(value)
        target = next((v for k, v in _SERVER_TIME_LEAVES.items() if low.endswith(k)), None)
        if target:
            secs = _parse_int(text)
            if secs is None:
                raw[leaf] = value
                caveats.append(CAVEAT_TIME_UNPARSEABLE)
            else:
                out[target] = stamp(secs, TimeUnit.SECONDS, TimeBasis.SERVER_CLOCK, anomaly=True)
        elif low.endswith("username"):
            out["username"] = text
        elif low.endswith("password"):
            out["password"] = text
        else:
            raw[leaf] = value
    return out, raw, caveats


def _subscription(group, account, source):
    rec = SubscriptionRecord(None, record_index=group.record_index, source=_provenance(group, source))
    rec.caveats.extend(group.caveats)
    for leaf, value in group.fields.items():
        low = leaf.rsplit("/", 1)[-1].lower()
        text = _last(value)
        if "service" in low or low.endswith("name") and "user" not in low:
            rec.service = text
        elif "start" in low or "end" in low or "expir" in low:
            secs = _parse_int(text)
            if secs is None:
                rec.raw[leaf] = value
                rec.caveats.append(CAVEAT_TIME_UNPARSEABLE)
            elif "start" in low:
                rec.start = stamp(secs)
            else:
                rec.end = stamp(secs)
        else:
            rec.raw[leaf] = value
    for k, v in account.items():
        setattr(rec, k, v)
    return rec


@dataclass
class DockEvent:
    pos: GeoPoint | None
    time: Timestamp | None
    raw: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)
    source: Provenance = field(default_factory=Provenance)


@dataclass(frozen=True)
class SearchHistory:
    terms: tuple = ()
    source: Provenance = field(default_factory=Provenance)


@dataclass
class NavkitRecords:
    homes: HomeSelection = NO_HOME
    subscriptions: list = field(default_factory=list)
    dock: DockEvent | None = None
    user_time_offset: object = None
    arrival_time: object = None
    search_history: SearchHistory = field(default_factory=SearchHistory)
    reminder_dates: dict = field(default_factory=dict)
    scalar_sources: dict = field(default_factory=dict)
    unmapped: list = field(default_factory=list)
    caveats: list = field(default_factory=list)


def _scalar(group):
    return _last(group.get(group.collection))


def _is_under(group, name):
    return group.container == name or group.collection == name or group.collection.startswith(name + "_")


def assemble_navkit(groups, source: str = "") -> NavkitRecords:
    out = NavkitRecords()
    homes, sub_groups, account_groups, search_groups = [], [], [], []
    dock = {}

    for g in groups:
        if _is_under(g, "UP_HomeLocations"):
            homes.append((g.record_index, assemble_location(g, Origin.HOME_LOCATION, source)))
        elif _is_under(g, "TTPlusManager"):
            (account_groups if g.collection == "TTPlusManager" else sub_groups).append(g)
        elif g.collection in ("LastDockedPositionX", "LastDockedPositionY", "LastDockedTime"):
            dock[g.collection] = g
        elif g.collection == "UserTimeOffset":
            out.scalar_sources[g.collection] = _provenance(g, source)
            value = _parse_int(_scalar(g))
            try:
                out.user_time_offset = decode_user_time_offset(value) if value is not None else None
            except RangeError as exc:
                out.caveats.append(f"UserTimeOffset: {exc}")
            if out.user_time_offset is None:
                out.unmapped.append(g)
        elif g.collection == "ArrivalTime":
            out.scalar_sources[g.collection] = _provenance(g, source)
            value = _parse_int(_scalar(g))
            if value is None:
                out.unmapped.append(g)
            else:
                out.arrival_time = decode_arrival_time(value)
        elif _is_under(g, "LocalSearchService"):
            search_groups.append(g)
        elif g.collection in REMINDER_KEYS:
            out.reminder_dates[g.collection] = _scalar(g)
        else:
            out.unmapped.append(g)

    out.homes = select_home_location(homes)

    account, account_raw, account_caveats = {}, {}, []
    for g in account_groups:
        a, r, c = _account_fields(g)
        account.update(a)
        account_raw.update(r)
        account_caveats.extend(c)
    for g in sorted(sub_groups, key=lambda g: g.record_index):
        out.subscriptions.append(_subscription(g, account, source))
    if account_groups and not sub_groups:
        g = account_groups[0]
        rec = SubscriptionRecord(None, record_index=g.record_index, source=_provenance(g, source))
        for k, v in account.items():
            setattr(rec, k, v)
        out.subscriptions.append(rec)
    if out.subscriptions:
        out.subscriptions[0].raw.update(account_raw)
        out.subscriptions[0].caveats.extend(account_caveats)

    if dock:
        out.dock = _assemble_dock(dock, source)

    terms = []
    lines = []
    for g in sorted(search_groups, key=lambda g: g.record_index):
        lines.extend(g.source_lines)
        term = next((_last(v) for k, v in g.fields.items() if k.lower().endswith("term")), None)
        if term is None and len(g.fields) == 1:
            term = _last(next(iter(g.fields.values())))
        if term is None:
            out.unmapped.append(g)
        elif term not in terms:
            terms.append(term)
    out.search_history = SearchHistory(tuple(terms), Provenance(source, tuple(sorted(lines))))
    return out


def _assemble_dock(dock, source):
    lines = sorted(l for g in dock.values() for l in g.source_lines)
    ev = DockEvent(None, None, source=Provenance(source, tuple(lines)))
    x = _parse_int(_scalar(dock["LastDockedPositionX"])) if "LastDockedPositionX" in dock else None
    y = _parse_int(_scalar(dock["LastDockedPositionY"])) if "LastDockedPositionY" in dock else None
    if x is not None and y is not None:
        try:
            ev.pos = GeoPoint(x, y)
        except RangeError:
            ev.caveats.append(CAVEAT_POS_UNPARSEABLE)
    elif "LastDockedPositionX" in dock or "LastDockedPositionY" in dock:
        ev.caveats.append(CAVEAT_PARTIAL_POINT)
    if ev.pos is None:
        for key in ("LastDockedPositionX", "LastDockedPositionY"):
            if key in dock:
                ev.raw[key] = _scalar(dock[key])
    if "LastDockedTime" in dock:
        minutes = _parse_int(_scalar(dock["LastDockedTime"]))
        if minutes is None:
            ev.raw["LastDockedTime"] = _scalar(dock["LastDockedTime"])
            ev.caveats.append(CAVEAT_TIME_UNPARSEABLE)
        else:
            ev.time = stamp(minutes, TimeUnit.MINUTES, TimeBasis.DEVICE_CLOCK)
    return ev


@dataclass
class MapSettingsRecords:
    recents: list = field(default_factory=list)
    addresses: list = field(default_factory=list)
    last_selected: list = field(default_factory=list)
    regular_routes: list = field(default_factory=list)
    routes: list = field(default_factory=list)
    last_gps: LastKnownGps | None = None
    unmapped: list = field(default_factory=list)


def assemble_mapsettings(groups, source: str = "") -> MapSettingsRecords:
    out = MapSettingsRecords()
    gps = {}
    for g in groups:
        if _is_under(g, "EngineRecents"):
            out.recents.append(assemble_location(g, Origin.ENGINE_RECENTS, source))
        elif _is_under(g, "AddressRecents"):
            out.addresses.append(assemble_location(g, Origin.ADDRESS_RECENTS, source))
        elif g.collection in ("LastSelectedPoi", "LastSelectedPoiData"):
            out.last_selected.append(assemble_location(g, Origin.LAST_SELECTED_POI, source))
        elif g.collection == "LastSelectedSearchItem":
            out.last_selected.append(assemble_location(g, Origin.LAST_SELECTED_SEARCH_ITEM, source))
        elif g.collection in ("RegularRouteLocHome", "RegularRouteLocWork"):
            rec = assemble_location(g, Origin(g.collection), source)
            rec.add_caveat(CAVEAT_EXPERIMENTAL)
            out.regular_routes.append(rec)
        elif _is_under(g, "RouteStream"):
            out.routes.append(assemble_route_stream(g, source))
        elif g.collection in ("LastKnownTrueGpsPosX", "LastKnownTrueGpsPosY"):
            gps[g.collection] = g
        else:
            out.unmapped.append(g)
    if gps:
        out.last_gps = assemble_last_known_gps(
            gps.get("LastKnownTrueGpsPosX"), gps.get("LastKnownTrueGpsPosY"), source
        )
    return out


def favourites_from_ov2(ov2_file, source: str = "") -> list:
    """LocationRecords for the simple-POI entries of a parsed ov2 file."""
    out = []
    for i, (rec, offset) in enumerate(zip(ov2_file.records, ov2_file.source_offsets)):
        if getattr(rec, "kind", None) != "simple_poi":
            continue
        loc = LocationRecord(
            Origin.OV2_FAVOURITE,
            i,
            user_name=rec.text,
            pos=rec.pos,
            pos_shape="ov2",
            loc_type=LocType.FAVOURITE,
            source=Provenance(source, (), offset),
        )
        if rec.text.encode("utf-8") != rec.name:
            loc.raw["name_hex"] = rec.name.hex()
        out.append(loc)
    return out
