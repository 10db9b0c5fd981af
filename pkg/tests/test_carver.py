import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from tomtom_forensics.carver import (
    MIN_OVERLAP,
    OV2_SIMPLE_POI,
    SEEK_PATTERN_HIT,
    SETTINGS_FRAGMENT,
    STRUCTURAL,
    WEAK,
    CarveHit,
    dedupe_hits,
    rank_hits,
    scan_file,
    scan_image,
)
from tomtom_forensics.fixture import build_noise_image
from tomtom_forensics.ov2 import validate_simple_poi
from oracles import simple_poi_bytes

CHUNK = 4096


def _key(result):
    return [(h.offset, h.kind, h.length) for h in result.hits]


def test_zero_byte_image():
    r = scan_image(io.BytesIO(b""), CHUNK)
    assert r.hits == [] and r.size == 0


def test_planted_records_found_at_offsets():
    image, planted = build_noise_image(7, 200_000, 20)
    r = scan_image(io.BytesIO(image), CHUNK)
    assert [(h.offset, h.length) for h in r.hits] == [(p["offset"], p["length"]) for p in planted]
    for h in r.hits:
        assert h.kind == OV2_SIMPLE_POI and h.confidence == STRUCTURAL
        assert validate_simple_poi(image[h.offset : h.end]) == (True, None)


def test_record_straddling_chunk_boundary():
    rec = simple_poi_bytes(471308, 5201816, "x" * 300)
    image = bytearray(3 * CHUNK)
    at = CHUNK - 100
    image[at : at + len(rec)] = rec
    r = scan_image(io.BytesIO(bytes(image)), CHUNK)
    assert _key(r) == [(at, OV2_SIMPLE_POI, len(rec))]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([MIN_OVERLAP + 1, 2000, 4096, 65536]))
def test_chunking_invariance(seed, chunk):
    image, _ = build_noise_image(seed, 60_000, 8)
    whole = scan_image(io.BytesIO(image), 1 << 20)
    assert _key(scan_image(io.BytesIO(image), chunk)) == _key(whole)


def test_overlap_too_small():
    with pytest.raises(ValueError):
        scan_image(io.BytesIO(b""), CHUNK, overlap=100)
    with pytest.raises(ValueError):
        scan_image(io.BytesIO(b""), 1000)


def test_settings_fragment_and_seek_pattern():
    frag = b'<string name="MapSettings*00000*/NeverAskedDefaultCountry*00000*">ZmFsc2U=</string>'
    seek = b"\x64\x15\x00\x00\x00\x11\x22\x33\x44" + bytes(5) + b"\x80\x00\x07" + bytes(4)
    image = bytes(100) + frag + bytes(50) + seek + bytes(50)
    plain = scan_image(io.BytesIO(image), CHUNK)
    assert [h.kind for h in plain.hits] == [SETTINGS_FRAGMENT]
    assert plain.hits[0].payload.text == "false"
    both = scan_image(io.BytesIO(image), CHUNK, seek_pattern=True)
    assert [(h.kind, h.confidence) for h in both.hits] == [(SETTINGS_FRAGMENT, STRUCTURAL), (SEEK_PATTERN_HIT, WEAK)]


class FlakyStream(io.BytesIO):
    def __init__(self, data, bad_at):
        super().__init__(data)
        self.bad_at = bad_at
        self.failed = False

    def read(self, n=-1):
        pos = self.tell()
        if not self.failed and pos <= self.bad_at < pos + n:
            self.failed = True
            raise OSError("simulated bad sector")
        return super().read(n)


def test_read_error_becomes_gap():
    image, planted = build_noise_image(3, 100_000, 10)
    r = scan_image(FlakyStream(image, 50_000), CHUNK)
    assert len(r.gaps) == 1 and r.gaps[0].reason == "simulated bad sector"
    g = r.gaps[0]
    assert r.size == len(image)
    survivors = [p["offset"] for p in planted if p["offset"] + p["length"] <= g.offset or p["offset"] >= g.offset + g.length]
    assert [h.offset for h in r.hits] == survivors


def test_progress_lines():
    out = io.StringIO()
    scan_image(io.BytesIO(bytes(10_000)), CHUNK, progress=out)
    lines = [json.loads(l) for l in out.getvalue().splitlines()]
    assert [l["chunk"] for l in lines] == [0, 1, 2]
    assert sum(l["bytes"] for l in lines) == 10_000


def test_parallel_matches_serial(tmp_path):
    image, _ = build_noise_image(11, 300_000, 30)
    path = tmp_path / "img.bin"
    path.write_bytes(image)
    serial = scan_file(path, chunk_size=CHUNK * 8)
    parallel = scan_file(path, chunk_size=CHUNK * 8, jobs=3)
    assert _key(serial) == _key(parallel) and len(serial.hits) == 30


def test_dedupe_keeps_longest():
    a = CarveHit(10, OV2_SIMPLE_POI, 20, None)
    b = CarveHit(15, OV2_SIMPLE_POI, 50, None)
    c = CarveHit(15, SETTINGS_FRAGMENT, 5, None)
    assert dedupe_hits([a, b, c]) == [b, c]
    w = CarveHit(0, SEEK_PATTERN_HIT, 5, None, WEAK)
    assert rank_hits([w, b]) == [b, w]
