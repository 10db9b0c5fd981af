"""detect -> parse -> assemble over an evidence tree, producing an EvidenceReport."""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field

from .detect import classify_tree, list_tree
from .errors import EmptyInput
from .ov2 import parse_ov2
from .records import (
    CAVEAT_UNCHANGEABLE,
    assemble_mapsettings,
    assemble_navkit,
    favourites_from_ov2,
)
from .report import EvidenceReport, group_json
from .settings_xml import MAP_SETTINGS, NAVKIT_SETTINGS, group_records, parse_store

log = logging.getLogger(__name__)

_STORE_MARKERS = (f'name="{MAP_SETTINGS}*', f'name="{NAVKIT_SETTINGS}*')


@dataclass
class DecodeOutcome:
    report: EvidenceReport
    partial: bool = False
    problems: list = field(default_factory=list)


def _collect(inputs):
    """(display path, filesystem path) for every file below the inputs."""
    files = []
    for item in inputs:
        item = os.fspath(item)
        if os.path.isdir(item):
            for rel in list_tree(item):
                files.append((rel, os.path.join(item, rel)))
        elif os.path.isfile(item):
            files.append((os.path.basename(item), item))
        else:
            raise FileNotFoundError(item)
    return files


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest(), os.path.getsize(path)


def decode_paths(inputs, strict: bool = False, header_lengths=()) -> DecodeOutcome:
    """Decode every TomTom artifact found below ``inputs``.

    Raises on fatal problems (unreadable input; any malformed data when
    ``strict``).  Recoverable problems set ``partial`` on the outcome.
    """
    files = _collect(inputs)
    report = EvidenceReport(source=classify_tree(rel for rel, _ in files))
    outcome = DecodeOutcome(report)
    strictness = "strict" if strict else "tolerant"

    for rel, path in files:
        if path.endswith("/") or os.path.isdir(path):
            continue
        lower = rel.lower()
        if lower.endswith(".ov2"):
            with open(path, "rb") as fh:
                data = fh.read()
            try:
                ov2 = parse_ov2(data, strictness, header_lengths)
            except EmptyInput:
                log.info("%s: empty ov2 file", rel)
                _record_input(report, rel, path)
                continue
            _record_input(report, rel, path)
            report.favourites.extend(favourites_from_ov2(ov2, rel))
            for gap in ov2.gaps:
                report.ov2_gaps.append({"file": rel, "offset": gap.offset, "length": len(gap.data),
                                        "reason": gap.reason, "data_hex": gap.data.hex()})
                outcome.partial = True
        elif lower.endswith(".xml"):
            with open(path, "rb") as fh:
                text = fh.read().decode("utf-8", errors="replace")
            if not any(m in text for m in _STORE_MARKERS):
                continue
            _record_input(report, rel, path)
            _decode_store(report, outcome, rel, text, strict)

    if outcome.partial:
        outcome.problems.append(
            f"{len(report.malformed)} malformed store entries, {len(report.ov2_gaps)} ov2 gaps"
        )
    return outcome


def _record_input(report, rel, path):
    digest, size = _digest(path)
    report.inputs.append({"path": rel, "sha256": digest, "size": size})


def _decode_store(report, outcome, rel, text, strict):
    parsed = parse_store(text, strict=strict)
    for m in parsed.malformed:
        report.malformed.append({"file": rel, "line": m.source_line, "name": m.name,
                                 "raw": m.raw, "reason": m.reason})
        outcome.partial = True
    groups = group_records(parsed.entries)
    map_groups = [g for g in groups if g.family == MAP_SETTINGS]
    nav_groups = [g for g in groups if g.family == NAVKIT_SETTINGS]
    other = [g for g in groups if g.family not in (MAP_SETTINGS, NAVKIT_SETTINGS)]

    if map_groups:
        ms = assemble_mapsettings(map_groups, rel)
        report.recents.extend(ms.recents)
        report.addresses.extend(ms.addresses)
        report.last_selected.extend(ms.last_selected)
        report.regular_routes.extend(ms.regular_routes)
        report.routes.extend(ms.routes)
        if ms.last_gps is not None:
            report.last_gps = ms.last_gps
        report.unmapped.extend(group_json(g, rel) for g in ms.unmapped)
    if nav_groups:
        nk = assemble_navkit(nav_groups, rel)
        if not nk.homes.is_none:
            report.homes = nk.homes
        report.subscriptions.extend(nk.subscriptions)
        if nk.dock is not None:
            report.dock = nk.dock
        if nk.user_time_offset is not None:
            report.user_time_offset = nk.user_time_offset
        if nk.arrival_time is not None:
            report.arrival_time = nk.arrival_time
        if nk.search_history.terms:
            report.searches = nk.search_history
        report.scalar_sources.update(nk.scalar_sources)
        for name, value in nk.reminder_dates.items():
            report.reminder_dates[name] = {"raw": value, "caveats": [CAVEAT_UNCHANGEABLE], "file": rel}
        report.unmapped.extend(group_json(g, rel) for g in nk.unmapped)
        report.caveats.extend(nk.caveats)
    report.unmapped.extend(group_json(g, rel) for g in other)
