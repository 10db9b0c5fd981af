"""Synthetic Android-app evidence trees with a ground-truth manifest.

The generator writes Favorites.ov2, a ``Benelux_<model>.xml`` map-settings
store (lines in shuffled order) and NavkitSettings.xml, plus optionally a
noise image with planted ov2 records.  Expected decoded values are computed
here from the generator's own ground truth, never by calling the decoders,
so :func:`manifest_view` of a decoded report can be compared against the
manifest as an independent oracle.
"""

from __future__ import annotations

import base64
import json
import os
import random
import struct
from datetime import datetime, timedelta, timezone

EVIDENCE_DIR = "evidence"
TOMTOM_DIR = "tomtom"
MANIFEST_NAME = "manifest.json"
NOISE_NAME = "noise.img"

_STREETS = ["Ridder Dirkstraat", "Sophiastraat", "Markt", "Kleiweg", "Turfmarkt", "Westhaven",
            "Oosthaven", "Lange Tiendeweg", "Hoogstraat", "Spieringstraat", "Karnemelksloot",
            "Crabethstraat", "Wijdstraat", "Zeugstraat", "Keizerstraat"]
_CITIES = ["Gouda", "Utrecht", "Delft", "Leiden", "Rotterdam", "Den Haag", "Haarlem",
           "Antwerpen", "Gent", "Brugge", "Luxembourg", "Zoetermeer", "Alphen aan den Rijn"]
_POI_NAMES = ["Station Gouda", "Café De Zalm", "Stadhuis", "Goudse Waag", "Sint-Janskerk",
              "Museum Gouda", "Bibliotheek", "Tankstation", "Ziekenhuis", "Dierenarts"]
_SEARCH_TERMS = ["pizza", "kapper", "apotheek", "fietsenmaker", "schoenen", "supermarkt", "bakker"]
_SERVICES = ["Mobile HD traffic", "TomTom Places", "Free POIs", "Free Maps", "Free Voices"]
_LOCTYPES = ["LOCTYP_MAPTICK", "LOCTYP_ADDRESS", "LOCTYP_HOME", "LOCTYP_POI", "LOCTYP_undefined",
             "LOCTYP_FAVOURITE", "LOCTYP_GPS"]

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _b64(text):
    return base64.b64encode(str(text).encode("utf-8")).decode("ascii")


def _key(*segments):
    return "/".join(f"{name}*{index:05d}*" for name, index in segments)


def _coords(rng):
    # Benelux bounding box in degrees x 10^5
    return rng.randint(250_000, 640_000), rng.randint(4_950_000, 5_350_000)


def _unix(dt):
    return int((dt - _EPOCH).total_seconds())


def _rand_datetime(rng, max_day=28):
    return datetime(rng.randint(2012, 2014), rng.randint(1, 12), rng.randint(1, max_day),
                    rng.randint(0, 23), rng.randint(0, 59), rng.randint(0, 59), tzinfo=timezone.utc)


def _add_month_and_day(dt):
    # only called with day <= 27, so the month shift never clamps
    year, month = (dt.year + 1, 1) if dt.month == 12 else (dt.year, dt.month + 1)
    return dt.replace(year=year, month=month) + timedelta(days=1)


def encode_simple_poi(lon, lat, name):
    raw = name.encode("utf-8")
    return struct.pack("<BIii", 2, 13 + len(raw) + 1, lon, lat) + raw + b"\x00"


def store_document(lines):
    body = "".join(f'    <string name="{name}">{value}</string>\n' for name, value in lines)
    return f"<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n{body}</map>\n"


class _Store:
    def __init__(self, root):
        self.root = root
        self.lines = []

    def put(self, segments, value):
        self.lines.append((_key((self.root, 0), *segments), _b64(value)))


def _location(rng, loc_type=None, named=False):
    lon, lat = _coords(rng)
    loc = {
        "loc_type": loc_type or rng.choice(_LOCTYPES),
        "lon_e5": lon,
        "lat_e5": lat,
        "loc_name": rng.choice(_STREETS),
        "city": rng.choice(_CITIES),
        "house_number": str(rng.randint(1, 250)) if rng.random() < 0.7 else None,
        "user_name": rng.choice(_POI_NAMES) if named or rng.random() < 0.3 else None,
    }
    return loc


def _put_location(store, prefix, index, loc, rng, split_pos=False, scale=1):
    def seg(name):
        return prefix + [(name, index)]

    store.put(seg("Location_LocType"), loc["loc_type"])
    lon, lat = loc["lon_e5"] * scale, loc["lat_e5"] * scale
    if split_pos:
        store.put(seg("Location_UserPosX"), lon)
        store.put(seg("Location_UserPosY"), lat)
    else:
        closing = ")" if rng.random() < 0.5 else ""
        store.put(seg("Location_UserPos"), f"({lon}; {lat}{closing}")
    store.put(seg("Location_LocName"), loc["loc_name"])
    store.put(seg("Location_CityName"), loc["city"])
    if loc["house_number"] is not None:
        store.put(prefix + [("Location_HouseNumber", index), ("HouseNumber_Number", index)], loc["house_number"])
    if loc["user_name"] is not None:
        store.put(seg("Location_UserName"), loc["user_name"])
    # routing engine fields kept raw by the decoder
    store.put(prefix + [("Location_Line", index), ("LineRec_MaxSpeed", index)], rng.choice([30, 50, 80, 100]))
    store.put(prefix + [("Location_NodeFrom", index), ("NodeRec_Delta", index)], rng.randint(0, 1000))


def _expected_location(loc, index):
    out = dict(loc)
    out["index"] = index
    out["loc_type"] = loc["loc_type"][len("LOCTYP_"):].upper()
    out["visited"] = out["loc_type"] == "GPS"
    return out


def build_fixture(seed: int, records: int = 5):
    """Return ``(files, manifest)`` where ``files`` maps relative path -> bytes."""
    rng = random.Random(seed)
    model_id = f"{rng.getrandbits(32):08X}"
    n = records
    expected = {
        "source_class": "AndroidApplication",
        "model_id": model_id,
        "favourites": [],
        "recents": [],
        "addresses": [],
        "last_selected": [],
        "routes": [],
        "last_gps": None,
        "homes": {"current": None, "history": []},
        "subscriptions": [],
        "dock": None,
        "user_time_offset": None,
        "arrival_time_unset": None,
        "searches": [],
    }

    # Favorites.ov2
    ov2 = bytearray()
    for _ in range(n):
        lon, lat = _coords(rng)
        name = f"{rng.choice(_STREETS)} {rng.randint(1, 200)}, {rng.choice(_CITIES)}"
        if rng.random() < 0.2:
            name = rng.choice(_POI_NAMES)
        ov2 += encode_simple_poi(lon, lat, name)
        expected["favourites"].append({"name": name, "lon_e5": lon, "lat_e5": lat})

    ms = _Store("MapSettings")
    nk = _Store("NavkitSettings")
    if n:
        ms.put([("NeverAskedDefaultCountry", 0)], "false")
        ms.put([("SafetyCameraWarnings", 0), ("SafetyCameraWarnings_Warning", 7),
                ("SafetyCameraWarnings_Warning_WarningDistance", 7)], 5000)

        for collection, element, key in (("EngineRecents", "EngineRecents_Recent", "recents"),
                                         ("AddressRecents", "AddressRecents_Address", "addresses")):
            for index in sorted(rng.sample(range(100), n)):
                loc = _location(rng, "LOCTYP_ADDRESS" if key == "addresses" else None)
                _put_location(ms, [(collection, 0), (element, index)], index, loc, rng)
                expected[key].append(_expected_location(loc, index))

        for r in range(min(n, 3)):
            dep = _location(rng, "LOCTYP_GPS")
            dst = _location(rng)
            when = _unix(_rand_datetime(rng))
            prefix = [("RouteStream", 0), ("RouteStream_Route", r)]
            _put_location(ms, prefix + [("RouteStream_Departure", r)], r, dep, rng)
            _put_location(ms, prefix + [("RouteStream_Destination", r)], r, dst, rng)
            ms.put(prefix + [("RouteStream_DepartureTime", r)], when)
            expected["routes"].append({
                "index": r,
                "departure": _expected_location(dep, r),
                "destination": _expected_location(dst, r),
                "departure_seconds": when,
            })

        poi = _location(rng, "LOCTYP_POI", named=True)
        _put_location(ms, [("LastSelectedPoi", 0)], 0, poi, rng)
        poi_data = _location(rng, "LOCTYP_POI", named=True)
        _put_location(ms, [("LastSelectedPoiData", 0)], 0, poi_data, rng, scale=2)
        expected["last_selected"] = [_expected_location(poi, 0), _expected_location(poi_data, 0)]

        gx, gy = _coords(rng)
        ms.put([("LastKnownTrueGpsPosX", 0)], gx)
        ms.put([("LastKnownTrueGpsPosY", 0)], gy)
        expected["last_gps"] = {"lon_e5": gx, "lat_e5": gy}

        # NavkitSettings
        home_idx = sorted(rng.sample(range(10), 1 + n % 3))
        homes = {}
        for index in home_idx:
            loc = _location(rng, "LOCTYP_HOME")
            homes[index] = _expected_location(loc, index)
            _put_location(nk, [("UP_HomeLocations", 0), ("UP_HomeLocations_Location", index)], index, loc,
                          rng, split_pos=rng.random() < 0.5)
        expected["homes"] = {"current": homes[home_idx[-1]], "history": [homes[i] for i in home_idx[:-1]]}

        username = f"user{rng.randint(100, 999)}@example.org"
        password = f"pw{rng.getrandbits(24):06x}"
        nk.put([("TTPlusManager", 0), ("Username", 0)], username)
        nk.put([("TTPlusManager", 0), ("Password", 0)], password)
        server = {}
        for leaf, key in (("ConnectionData_LastValidTime", "last_valid"),
                          ("ConnectionData_LastConnectionTime", "last_connection"),
                          ("AccountInfo_DatelastUpdate", "account_date_last_update")):
            true_time = _rand_datetime(rng, max_day=27)
            stored = _unix(_add_month_and_day(true_time))
            nk.put([("TTPlusManager", 0), (leaf, 0)], stored)
            server[key] = {"seconds": stored, "adjusted_seconds": _unix(true_time)}
        for s, service in enumerate(rng.sample(_SERVICES, 1 + n % 2)):
            start = _unix(_rand_datetime(rng))
            end = start + 365 * 86400
            prefix = [("TTPlusManager", 0), ("TTPlusManager_Subscription", s + 1)]
            nk.put(prefix + [("Subscription_Service", s + 1)], service)
            nk.put(prefix + [("Subscription_StartTime", s + 1)], start)
            nk.put(prefix + [("Subscription_EndTime", s + 1)], end)
            expected["subscriptions"].append({"service": service, "start": start, "end": end,
                                              "username": username, "password": password, **server})

        dx, dy = _coords(rng)
        minutes = _unix(_rand_datetime(rng)) // 60
        nk.put([("LastDockedPositionX", 0)], dx)
        nk.put([("LastDockedPositionY", 0)], dy)
        nk.put([("LastDockedTime", 0)], minutes)
        expected["dock"] = {"lon_e5": dx, "lat_e5": dy, "seconds": minutes * 60}

        offset = 7259 if rng.random() < 0.5 else rng.choice([-18000, 0, 3600, 19800])
        nk.put([("UserTimeOffset", 0)], offset)
        sign = "-" if offset < 0 else "+"
        a = abs(offset)
        expected["user_time_offset"] = f"{sign}{a // 3600:02d}:{a % 3600 // 60:02d}:{a % 60:02d}"
        nk.put([("ArrivalTime", 0)], 86401)
        expected["arrival_time_unset"] = True

        terms = rng.sample(_SEARCH_TERMS, min(len(_SEARCH_TERMS), 2 + n % 4))
        history = terms + [terms[0]]
        for i, term in enumerate(history):
            nk.put([("LocalSearchService", 0), ("LocalSearchService_History", i), ("History_Term", i)], term)
        expected["searches"] = terms

        nk.put([("MapUpdateLastReminderDate", 0)], _unix(_rand_datetime(rng)))
        nk.put([("LMGDisplayDate", 0)], 0)

    rng.shuffle(ms.lines)
    rng.shuffle(nk.lines)
    base = f"{EVIDENCE_DIR}/{TOMTOM_DIR}"
    files = {
        f"{base}/Favorites.ov2": bytes(ov2),
        f"{base}/Benelux_{model_id}.xml": store_document(ms.lines).encode("utf-8"),
        f"{base}/NavkitSettings.xml": store_document(nk.lines).encode("utf-8"),
    }
    manifest = {"seed": seed, "records": n, "evidence": EVIDENCE_DIR, "expected": expected}
    return files, manifest


def build_noise_image(seed: int, size: int, planted: int):
    """Random bytes with ``planted`` simple-POI records at non-overlapping offsets."""
    rng = random.Random(f"noise-{seed}")
    image = bytearray(rng.randbytes(size))
    records = []
    if planted:
        slot = size // planted
        for i in range(planted):
            lon, lat = _coords(rng)
            name = f"{rng.choice(_STREETS)} {rng.randint(1, 200)}, {rng.choice(_CITIES)}"
            rec = encode_simple_poi(lon, lat, name)
            if len(rec) > slot:
                raise ValueError(f"image of {size} bytes too small for {planted} records")
            offset = i * slot + rng.randint(0, slot - len(rec))
            image[offset : offset + len(rec)] = rec
            records.append({"offset": offset, "length": len(rec), "name": name, "lon_e5": lon, "lat_e5": lat})
    return bytes(image), records


def write_fixture(out_dir, seed: int, records: int = 5, noise_size: int | None = None, planted: int | None = None):
    files, manifest = build_fixture(seed, records)
    if noise_size:
        image, placed = build_noise_image(seed, noise_size, records if planted is None else planted)
        files[NOISE_NAME] = image
        manifest["noise_image"] = {"path": NOISE_NAME, "size": noise_size, "planted": placed}
    for rel, data in files.items():
        path = os.path.join(out_dir, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(data)
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return manifest


# -- comparison ---------------------------------------------------------------

def _loc_view(loc, index=None):
    if loc is None:
        return None
    pos = loc["position"] or {}
    return {
        "index": loc["record_index"] if index is None else index,
        "loc_type": loc["loc_type"],
        "lon_e5": pos.get("lon_e5"),
        "lat_e5": pos.get("lat_e5"),
        "loc_name": loc["loc_name"],
        "city": loc["city"],
        "house_number": loc["house_number"],
        "user_name": loc["user_name"],
        "visited": "visited at some point" in loc["caveats"],
    }


def _time_seconds(t):
    return None if t is None else t["seconds"]


def _server_view(t):
    alt = next(a["seconds"] for a in t["alternatives"] if a["label"] != "as_stored")
    return {"seconds": t["seconds"], "adjusted_seconds": alt}


def manifest_view(report: dict) -> dict:
    """Project a decoded JSON report onto the manifest's ``expected`` layout."""
    homes = report["homes"]
    dock = report["dock"]
    gps = report["last_gps"]
    offset = report["user_time_offset"]
    arrival = report["arrival_time"]
    return {
        "source_class": report["source"]["class"],
        "model_id": report["source"]["model_id"],
        "favourites": [
            {"name": f["user_name"], "lon_e5": f["position"]["lon_e5"], "lat_e5": f["position"]["lat_e5"]}
            for f in report["favourites"]
        ],
        "recents": [_loc_view(r) for r in sorted(report["recents"], key=lambda r: r["record_index"])],
        "addresses": [_loc_view(r) for r in sorted(report["addresses"], key=lambda r: r["record_index"])],
        "last_selected": [_loc_view(r) for r in report["last_selected"]],
        "routes": [
            {
                "index": r["record_index"],
                "departure": _loc_view(r["departure"]),
                "destination": _loc_view(r["destination"]),
                "departure_seconds": _time_seconds(r["departure_time"]),
            }
            for r in sorted(report["routes"], key=lambda r: r["record_index"])
        ],
        "last_gps": None if gps is None else {"lon_e5": gps["lon_e5"], "lat_e5": gps["lat_e5"]},
        "homes": {
            "current": _loc_view(homes["current"]),
            "history": [_loc_view(h) for h in homes["history"]],
        },
        "subscriptions": [
            {
                "service": s["service"],
                "start": _time_seconds(s["start"]),
                "end": _time_seconds(s["end"]),
                "username": s["username"],
                "password": s["password"],
                "last_valid": _server_view(s["last_valid"]),
                "last_connection": _server_view(s["last_connection"]),
                "account_date_last_update": _server_view(s["account_date_last_update"]),
            }
            for s in report["subscriptions"]
        ],
        "dock": None if dock is None else {
            "lon_e5": dock["position"]["lon_e5"],
            "lat_e5": dock["position"]["lat_e5"],
            "seconds": _time_seconds(dock["time"]),
        },
        "user_time_offset": None if offset is None else offset["rendered"],
        "arrival_time_unset": None if arrival is None else arrival["unset"],
        "searches": list(report["searches"]["terms"]),
    }
