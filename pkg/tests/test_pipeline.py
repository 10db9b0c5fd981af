import json
import os
import tempfile

from hypothesis import given, settings, strategies as st

from tomtom_forensics.fixture import build_fixture, manifest_view, write_fixture
from tomtom_forensics.pipeline import decode_paths
from tomtom_forensics.report import emit_json, report_dict
from oracles import simple_poi_bytes


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 12))
def test_decode_of_fixture_equals_manifest(seed, records):
    with tempfile.TemporaryDirectory() as tmp:
        manifest = write_fixture(tmp, seed, records)
        outcome = decode_paths([os.path.join(tmp, "evidence")])
    assert not outcome.partial
    assert manifest_view(report_dict(outcome.report, reveal_credentials=True)) == manifest["expected"]


@settings(max_examples=20)
@given(st.integers(0, 2**32))
def test_fixture_bytes_are_a_function_of_seed(seed):
    assert build_fixture(seed) == build_fixture(seed)


def test_ov2_gap_marks_partial(tmp_path):
    data = simple_poi_bytes(1, 2, "a") + b"\x09\x09\x09" + simple_poi_bytes(3, 4, "b")
    (tmp_path / "Favorites.ov2").write_bytes(data)
    outcome = decode_paths([tmp_path])
    assert outcome.partial
    assert [f.user_name for f in outcome.report.favourites] == ["a", "b"]
    (gap,) = outcome.report.ov2_gaps
    assert (gap["offset"], gap["data_hex"]) == (15, "090909")


def test_inputs_are_digested(tmp_path):
    (tmp_path / "Favorites.ov2").write_bytes(simple_poi_bytes(1, 2, "a"))
    (tmp_path / "unrelated.xml").write_text("<x/>")
    doc = json.loads(emit_json(decode_paths([tmp_path]).report))
    (entry,) = doc["tool_metadata"]["inputs"]
    assert entry["path"] == "Favorites.ov2" and len(entry["sha256"]) == 64 and entry["size"] == 15
