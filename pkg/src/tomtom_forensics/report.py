"""Analyst-facing outputs: canonical JSON, GPX 1.1 waypoints and a CSV timeline.

Every datum is emitted with its provenance (file and line numbers or byte
offset) and caveats.  Raw on-disk values travel alongside every decoded
interpretation, so a report can be re-rendered without the evidence.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from . import __version__
from .detect import Source, SourceClass
from .geo_time import DATUM_TAG, GeoPoint
from .records import NO_HOME, HomeSelection, Provenance, SearchHistory

GPX_NS = "http://www.topografix.com/GPX/1/1"
CREATOR = f"tomtom-forensics {__version__}"
REDACTED = "[REDACTED]"
_NO_SOURCE = Provenance()

TIMELINE_COLUMNS = (
    "timestamp_utc",
    "timestamp_raw",
    "time_basis",
    "anomaly_alternative",
    "event_type",
    "lat",
    "lon",
    "name",
    "source",
    "caveats",
)


@dataclass
class EvidenceReport:
    source: SourceClass = field(default_factory=lambda: SourceClass(Source.UNKNOWN))
    favourites: list = field(default_factory=list)
    recents: list = field(default_factory=list)
    addresses: list = field(default_factory=list)
    last_selected: list = field(default_factory=list)
    regular_routes: list = field(default_factory=list)
    routes: list = field(default_factory=list)
    homes: HomeSelection = NO_HOME
    subscriptions: list = field(default_factory=list)
    dock: object = None
    last_gps: object = None
    searches: SearchHistory = field(default_factory=SearchHistory)
    user_time_offset: object = None
    arrival_time: object = None
    reminder_dates: dict = field(default_factory=dict)
    scalar_sources: dict = field(default_factory=dict)
    unmapped: list = field(default_factory=list)
    malformed: list = field(default_factory=list)
    ov2_gaps: list = field(default_factory=list)
    carve_hits: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    run_time: str | None = None
    caveats: list = field(default_factory=list)


# -- JSON -------------------------------------------------------------------

def source_json(prov):
    return {"file": prov.file, "lines": list(prov.lines), "offset": prov.offset}


def point_json(pos: GeoPoint | None):
    if pos is None:
        return None
    return {
        "lon": float(pos.lon_deg),
        "lat": float(pos.lat_deg),
        "lon_e5": pos.lon,
        "lat_e5": pos.lat,
        "datum": DATUM_TAG,
    }


def time_json(ts):
    if ts is None:
        return None
    spec, norm = ts.spec, ts.normalized
    out = {
        "raw": spec.raw,
        "unit": spec.unit.value,
        "basis": spec.basis.value,
        "anomaly_flag": spec.anomaly_flag,
        "seconds": None,
        "utc": None,
        "epoch": None,
        "alternatives": [],
        "caveats": [],
        "error": ts.error,
    }
    if norm is not None:
        out.update(
            seconds=norm.seconds,
            utc=norm.utc,
            epoch=norm.epoch,
            alternatives=[{"label": a.label, "seconds": a.seconds, "utc": a.utc} for a in norm.alternatives],
            caveats=list(norm.caveats),
        )
    return out


def location_json(rec):
    if rec is None:
        return None
    return {
        "origin": rec.origin.value,
        "record_index": rec.record_index,
        "user_name": rec.user_name,
        "position": point_json(rec.pos),
        "position_shape": rec.pos_shape,
        "loc_name": rec.loc_name,
        "loc_type": rec.loc_type.value,
        "loc_type_raw": rec.loc_type_raw,
        "city": rec.city,
        "house_number": rec.house_number,
        "raw": rec.raw,
        "caveats": list(rec.caveats),
        "source": source_json(rec.source),
    }


def route_json(r):
    return {
        "record_index": r.record_index,
        "departure": location_json(r.departure),
        "destination": location_json(r.destination),
        "departure_time": time_json(r.departure_time),
        "raw": r.raw,
        "caveats": list(r.caveats),
        "source": source_json(r.source),
    }


def subscription_json(s, reveal_credentials=False):
    password = s.password
    if password is not None and not reveal_credentials:
        password = REDACTED
    return {
        "record_index": s.record_index,
        "service": s.service,
        "start": time_json(s.start),
        "end": time_json(s.end),
        "username": s.username,
        "password": password,
        "last_valid": time_json(s.last_valid),
        "last_connection": time_json(s.last_connection),
        "account_date_last_update": time_json(s.account_date_last_update),
        "raw": s.raw,
        "caveats": list(s.caveats),
        "source": source_json(s.source),
    }


def group_json(g, file=""):
    return {
        "family": g.family,
        "container": g.container,
        "collection": g.collection,
        "record_index": g.record_index,
        "fields": g.fields,
        "caveats": list(g.caveats),
        "source": {"file": file, "lines": sorted(g.source_lines), "offset": None},
    }


def hit_json(h, file=""):
    payload = h.payload
    if h.kind == "ov2_simple_poi":
        payload = {"name": payload.text, "position": point_json(payload.pos), "total_len": payload.total_len}
    elif h.kind == "settings_fragment":
        payload = {"key_path": str(payload.path), "raw_b64": payload.raw_b64, "decoded": payload.text}
    return {
        "offset": h.offset,
        "kind": h.kind,
        "length": h.length,
        "confidence": h.confidence,
        "payload": payload,
        "source": {"file": file, "lines": [], "offset": h.offset},
    }


def report_dict(report: EvidenceReport, reveal_credentials: bool = False) -> dict:
    src = report.source
    homes = report.homes
    dock = report.dock
    gps = report.last_gps
    offset = report.user_time_offset
    arrival = report.arrival_time
    return {
        "source": {
            "class": src.kind.value,
            "model_id": src.model_id,
            "region": src.region,
            "candidates": [c.value for c in src.candidates],
            "evidence": [{"artifact": a, "path": p} for a, p in src.evidence],
            "notes": list(src.notes),
        },
        "favourites": [location_json(r) for r in report.favourites],
        "recents": [location_json(r) for r in report.recents],
        "addresses": [location_json(r) for r in report.addresses],
        "last_selected": [location_json(r) for r in report.last_selected],
        "regular_routes": [location_json(r) for r in report.regular_routes],
        "routes": [route_json(r) for r in report.routes],
        "homes": {
            "current": location_json(homes.current),
            "history": [location_json(r) for r in homes.history],
            "caveats": list(homes.caveats),
        },
        "subscriptions": [subscription_json(s, reveal_credentials) for s in report.subscriptions],
        "dock": None if dock is None else {
            "position": point_json(dock.pos),
            "time": time_json(dock.time),
            "raw": dock.raw,
            "caveats": list(dock.caveats),
            "source": source_json(dock.source),
        },
        "last_gps": None if gps is None else {
            "lon_e5": gps.lon,
            "lat_e5": gps.lat,
            "position": point_json(gps.point),
            "caveats": list(gps.caveats),
            "source": source_json(gps.source),
        },
        "searches": {"terms": list(report.searches.terms), "source": source_json(report.searches.source)},
        "user_time_offset": None if offset is None else {
            "raw": offset.seconds,
            "rendered": offset.render(),
            "source": source_json(report.scalar_sources.get("UserTimeOffset", _NO_SOURCE)),
        },
        "arrival_time": None if arrival is None else {
            "raw": arrival.raw,
            "unset": arrival.is_unset,
            "seconds_of_day": arrival.seconds_of_day,
            "caveats": list(arrival.caveats),
            "source": source_json(report.scalar_sources.get("ArrivalTime", _NO_SOURCE)),
        },
        "reminder_dates": dict(report.reminder_dates),
        "unmapped": list(report.unmapped),
        "malformed": list(report.malformed),
        "ov2_gaps": list(report.ov2_gaps),
        "carve_hits": [hit_json(h, f) for f, h in report.carve_hits],
        "caveats": list(report.caveats),
        "tool_metadata": {
            "tool": "tomtom-forensics",
            "version": __version__,
            "inputs": list(report.inputs),
            "run_time": report.run_time,
        },
    }




def emit_json(report: EvidenceReport, reveal_credentials: bool = False) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report_dict(report, reveal_credentials), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- GPX --------------------------------------------------------------------

def _source_text(prov):
    where = prov.file or "<unknown>"
    if prov.offset is not None:
        return f"{where} @ offset {prov.offset}"
    if prov.lines:
        return f"{where} lines {','.join(str(l) for l in prov.lines)}"
    return where


def _waypoints(report):
    """(point, name, type, timestamp, caveats, provenance) for every positioned record."""
    def loc(rec, label):
        if rec is not None and rec.pos is not None:
            name = rec.user_name or rec.loc_name or f"{rec.origin.value} {rec.record_index}"
            yield rec.pos, name, label, None, list(rec.caveats), rec.source

    for r in report.favourites:
        yield from loc(r, "favourite")
    for r in report.recents:
        yield from loc(r, "recent_destination")
    for r in report.addresses:
        yield from loc(r, "entered_address")
    for r in report.last_selected:
        yield from loc(r, r.origin.value)
    for r in report.regular_routes:
        yield from loc(r, r.origin.value)
    if report.homes.current is not None:
        yield from loc(report.homes.current, "home_current")
    for r in report.homes.history:
        yield from loc(r, "home_prior")
    for route in report.routes:
        dep = route.departure
        if dep is not None and dep.pos is not None:
            name = dep.user_name or dep.loc_name or f"route {route.record_index} departure"
            yield dep.pos, name, "route_departure", route.departure_time, dep.caveats + route.caveats, route.source
        yield from loc(route.destination, "route_destination")
    if report.dock is not None and report.dock.pos is not None:
        yield report.dock.pos, "last docked", "dock", report.dock.time, list(report.dock.caveats), report.dock.source
    if report.last_gps is not None and report.last_gps.point is not None:
        yield report.last_gps.point, "last known GPS", "last_known_gps", None, list(report.last_gps.caveats), report.last_gps.source


def emit_gpx(report: EvidenceReport) -> str:
    ET.register_namespace("", GPX_NS)
    root = ET.Element(f"{{{GPX_NS}}}gpx", {"version": "1.1", "creator": CREATOR})
    for pos, name, kind, ts, caveats, prov in _waypoints(report):
        wpt = ET.SubElement(root, f"{{{GPX_NS}}}wpt", {
            "lat": str(pos.lat_deg),
            "lon": str(pos.lon_deg),
        })
        desc = list(caveats)
        if ts is not None and ts.normalized is not None:
            ET.SubElement(wpt, f"{{{GPX_NS}}}time").text = ts.normalized.utc
            desc = [f"time basis: {ts.spec.basis.value}"] + list(ts.normalized.caveats) + desc
        ET.SubElement(wpt, f"{{{GPX_NS}}}name").text = name
        desc.append(f"source: {_source_text(prov)}")
        ET.SubElement(wpt, f"{{{GPX_NS}}}desc").text = "; ".join(dict.fromkeys(desc))
        ET.SubElement(wpt, f"{{{GPX_NS}}}type").text = kind
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode", xml_declaration=False).join(
        ['<?xml version="1.0" encoding="UTF-8"?>\n', "\n"]
    )


# -- CSV timeline -------------------------------------------------------------

def _timeline_events(report):
    for route in report.routes:
        pos = route.departure.pos if route.departure is not None else None
        name = None
        if route.departure is not None:
            name = route.departure.user_name or route.departure.loc_name
        yield "route_departure", route.departure_time, pos, name, route.caveats, route.source
    if report.dock is not None:
        yield "dock", report.dock.time, report.dock.pos, "last docked", report.dock.caveats, report.dock.source
    for sub in report.subscriptions:
        for attr in ("start", "end", "last_valid", "last_connection", "account_date_last_update"):
            yield f"subscription_{attr}", getattr(sub, attr), None, sub.service, sub.caveats, sub.source


def emit_timeline_csv(report: EvidenceReport) -> str:
    rows = []
    for event_type, ts, pos, name, caveats, prov in _timeline_events(report):
        if ts is None or ts.normalized is None:
            continue
        norm = ts.normalized
        alt = next((a.utc for a in norm.alternatives if a.label != "as_stored"), "")
        rows.append((norm.seconds, event_type, _source_text(prov), {
            "timestamp_utc": norm.utc,
            "timestamp_raw": str(ts.spec.raw),
            "time_basis": ts.spec.basis.value,
            "anomaly_alternative": alt,
            "event_type": event_type,
            "lat": str(pos.lat_deg) if pos is not None else "",
            "lon": str(pos.lon_deg) if pos is not None else "",
            "name": name or "",
            "source": _source_text(prov),
            "caveats": "; ".join(dict.fromkeys(list(norm.caveats) + list(caveats))),
        }))
    rows.sort(key=lambda r: r[:3])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TIMELINE_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    for *_, row in rows:
        writer.writerow(row)
    return buf.getvalue()
