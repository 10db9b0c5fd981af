"""Classify an evidence tree as TomTom PND (first/second series) or Android app.

Classification is by file name.  Each recognised artifact votes for the
device generations that store it; the class with most votes wins and ties
are reported as Unknown with the tied candidates listed.
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass, field
from pathlib import PurePosixPath

from .errors import ManualReviewRequired


class Source(str, enum.Enum):
    PND_FIRST_SERIES = "PndFirstSeries"
    PND_SECOND_SERIES = "PndSecondSeries"
    ANDROID_APPLICATION = "AndroidApplication"
    UNKNOWN = "Unknown"


PND1, PND2, AA = Source.PND_FIRST_SERIES, Source.PND_SECOND_SERIES, Source.ANDROID_APPLICATION

_REGION_STORE_RE = re.compile(r"^([A-Za-z]+)_([0-9A-Fa-f]{8})\.xml$")

# lower-cased file name -> (artifact label, classes that store it)
_FILE_VOTES = {
    "mapsettings.cfg": ("mapsettings.cfg", (PND1,)),
    "mapsettings.tlv": ("mapsettings.tlv", (PND2,)),
    "userpatch.dat": ("userpatch.dat", (PND2,)),
    "settings.tlv": ("settings.tlv", (PND2,)),
    "mobility.sim": ("mobility.sim", (PND2,)),
    "favorites.ov2": ("Favorites.ov2", (PND2, AA)),
    "navkitsettings.xml": ("NavkitSettings.xml", (AA,)),
}

NOTE_TRIPLOGS_PND = "statdata folder present: triplogs possibly present"
NOTE_TRIPLOGS_AA = "triplogs are not expected for the Android application"
NOTE_PND_NOT_PARSED = "PND-format files are identified but not decoded by this tool"


def _region_store(name):
    m = _REGION_STORE_RE.match(name)
    return (m.group(1), m.group(2)) if m else None


@dataclass(frozen=True)
class SourceClass:
    kind: Source
    evidence: tuple = ()
    model_id: str | None = None
    region: str | None = None
    candidates: tuple = ()
    notes: tuple = ()


def _norm(path):
    return PurePosixPath(str(path).replace("\\", "/"))


def _artifacts(paths):
    """(artifact label, path, voting classes) for every recognised path."""
    paths = sorted({str(p) for p in paths})
    navkit_dirs = {
        _norm(p).parent for p in paths if _norm(p).name.lower() == "navkitsettings.xml"
    }
    found = []
    for p in paths:
        pp = _norm(p)
        name = pp.name.lower()
        if name in _FILE_VOTES:
            label, votes = _FILE_VOTES[name]
            found.append((label, p, votes))
            continue
        region = _region_store(pp.name)
        if region:
            tomtom_ancestry = any("tomtom" in part.lower() for part in pp.parts[:-1])
            if region[0].lower() == "benelux" or pp.parent in navkit_dirs or tomtom_ancestry:
                found.append(("region_store", p, (AA,)))
            continue
        if any(part.lower() == "statdata" for part in pp.parts):
            found.append(("statdata", p, (PND1, PND2)))
    return found


def classify_tree(paths) -> SourceClass:
    found = _artifacts(paths)
    if not found:
        return SourceClass(Source.UNKNOWN)

    scores = {PND1: 0, PND2: 0, AA: 0}
    seen = set()
    for label, _, votes in found:
        if label in seen:
            continue
        seen.add(label)
        for v in votes:
            scores[v] += 1
    best = max(scores.values())
    top = tuple(s for s in (PND1, PND2, AA) if scores[s] == best)
    kind = top[0] if len(top) == 1 else Source.UNKNOWN

    model_id = region = None
    stores = sorted(p for label, p, _ in found if label == "region_store")
    if stores:
        region, model_id = _region_store(_norm(stores[0]).name)
    notes = []
    has_statdata = any(label == "statdata" for label, _, _ in found)
    if has_statdata and kind in (PND1, PND2):
        notes.append(NOTE_TRIPLOGS_PND)
    if kind is AA:
        notes.append(NOTE_TRIPLOGS_AA)
    if kind in (PND1, PND2):
        notes.append(NOTE_PND_NOT_PARSED)
    evidence = tuple(sorted((label, p) for label, p, _ in found))
    return SourceClass(
        kind,
        evidence,
        model_id,
        region,
        candidates=top if kind is Source.UNKNOWN else (),
        notes=tuple(notes),
    )


def list_tree(root) -> list:
    """Relative POSIX paths of every file (and statdata folder) under ``root``."""
    root = os.fspath(root)
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel_dir = os.path.relpath(dirpath, root)
        for name in sorted(filenames):
            rel = os.path.join(rel_dir, name) if rel_dir != "." else name
            out.append(rel.replace(os.sep, "/"))
        for name in dirnames:
            if name.lower() == "statdata":
                rel = os.path.join(rel_dir, name) if rel_dir != "." else name
                out.append(rel.replace(os.sep, "/") + "/")
    return out


NOT_FOUND = "Not Found"
HANDLED_BY_OS = "Handled by the Android OS, not by the TomTom Android Application"
NOT_APPLICABLE = "Not applicable for first generation PND"

# artifact class -> cell per source; a cell is (text, matcher key or None)
ARTIFACT_TABLE = (
    ("Triplogs", {PND1: ("Statdata folder", "statdata"), PND2: ("Statdata folder", "statdata"),
                  AA: (NOT_FOUND, None)}),
    ("Home Location", {PND1: ("mapsettings.cfg", "mapsettings.cfg"), PND2: ("userpatch.dat", "userpatch.dat"),
                       AA: ("NavkitSettings.xml", "NavkitSettings.xml")}),
    ("Favourites", {PND1: ("mapsettings.cfg", "mapsettings.cfg"), PND2: ("Favorites.ov2", "Favorites.ov2"),
                    AA: ("Favorites.ov2", "Favorites.ov2")}),
    ("Recent Destinations", {PND1: ("mapsettings.cfg", "mapsettings.cfg"),
                             PND2: ("mapsettings.tlv", "mapsettings.tlv"),
                             AA: ("Benelux_XXXXXXXXX.xml", "region_store")}),
    ("Entered locations", {PND1: ("mapsettings.cfg", "mapsettings.cfg"),
                           PND2: ("mapsettings.tlv", "mapsettings.tlv"),
                           AA: ("Benelux_XXXXXXXXX.xml", "region_store")}),
    ("Journeys", {PND1: ("mapsettings.cfg", "mapsettings.cfg"), PND2: ("mapsettings.tlv", "mapsettings.tlv"),
                  AA: ("Benelux_XXXXXXXXX.xml with departure time", "region_store")}),
    ("Last docked", {PND1: ("mapsettings.cfg", "mapsettings.cfg"), PND2: ("Userpatch.dat", "userpatch.dat"),
                     AA: ("NavkitSettings.xml, with a time stamp", "NavkitSettings.xml")}),
    ("Bluetooth coupled devices", {PND1: ("mapsettings.cfg", "mapsettings.cfg"),
                                   PND2: ("Settings.tlv", "settings.tlv"), AA: (HANDLED_BY_OS, None)}),
    ("Simcard data", {PND1: (NOT_APPLICABLE, None), PND2: ("mobility.sim", "mobility.sim"),
                      AA: (HANDLED_BY_OS, None)}),
)


@dataclass(frozen=True)
class ChecklistRow:
    artifact_class: str
    expected: str
    status: str
    found: tuple = field(default=())


def expected_artifacts(source: SourceClass) -> list:
    """Analyst checklist: where each artifact class lives for this source and whether it was found."""
    if source.kind is Source.UNKNOWN:
        raise ManualReviewRequired(
            "source class is Unknown; review the evidence manually"
            + (f" (candidates: {', '.join(c.value for c in source.candidates)})" if source.candidates else "")
        )
    by_label = {}
    for label, path in source.evidence:
        by_label.setdefault(label.lower(), []).append(path)
    rows = []
    for artifact_class, cells in ARTIFACT_TABLE:
        text, key = cells[source.kind]
        if key is None:
            rows.append(ChecklistRow(artifact_class, text, "not_expected"))
            continue
        hits = tuple(sorted(by_label.get(key.lower(), ())))
        rows.append(ChecklistRow(artifact_class, text, "found" if hits else "missing", hits))
    return rows
