"""Serialization tests: 17-digit float round-trips, canonical JSON, versioned
CSV/JSON files, and atomic writes.

The determinism contract for artifacts rests on these helpers, so the float
round-trip is checked property-style across the full double range.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weightlab import SCHEMA_VERSION
from weightlab.serialization import (
    atomic_write_text,
    config_digest,
    dumps_canonical,
    fmt_float,
    parse_float,
    read_csv,
    read_json,
    sha256_file,
    sha256_text,
    write_csv,
    write_json,
)


# ---------------------------------------------------------------------------
# float formatting
# ---------------------------------------------------------------------------


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips_every_double(x):
    token = fmt_float(x)
    assert parse_float(token) == x


def test_fmt_float_special_values():
    assert fmt_float(float("nan")) == "nan"
    assert fmt_float(float("inf")) == "inf"
    assert fmt_float(float("-inf")) == "-inf"
    assert math.isnan(parse_float("nan"))
    assert parse_float("inf") == math.inf


def test_fmt_float_accepts_numpy_scalars():
    x = np.float64(0.1) / np.float64(3.0)
    assert parse_float(fmt_float(x)) == float(x)


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------


def test_dumps_canonical_sorts_keys():
    assert dumps_canonical({"b": 1, "a": 2}) == '{"a": 2,"b": 1}'


def test_dumps_canonical_key_order_invariance():
    a = {"x": 1.5, "y": [1, 2], "z": {"p": 0.1}}
    b = {"z": {"p": 0.1}, "y": [1, 2], "x": 1.5}
    assert dumps_canonical(a) == dumps_canonical(b)
    assert config_digest(a) == config_digest(b)


def test_dumps_canonical_pins_float_digits():
    # repr(0.1) is "0.1" but the canonical form carries all 17 digits
    assert dumps_canonical(0.1) == "0.10000000000000001"
    assert json.loads(dumps_canonical(0.1)) == 0.1


def test_dumps_canonical_nan_inf_as_strings():
    out = dumps_canonical({"a": float("nan"), "b": float("inf")})
    doc = json.loads(out)  # strict JSON: would fail on bare NaN tokens
    assert doc == {"a": "nan", "b": "inf"}


def test_dumps_canonical_numpy_arrays():
    doc = json.loads(dumps_canonical({"v": np.array([1.0, 2.0])}))
    assert doc["v"] == [1.0, 2.0]


def test_dumps_canonical_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps_canonical({"x": object()})


def test_bool_stays_bool():
    assert dumps_canonical(True) == "true"
    assert dumps_canonical({"flag": False}) == '{"flag": false}'


# ---------------------------------------------------------------------------
# versioned CSV / JSON files
# ---------------------------------------------------------------------------


def test_csv_round_trip_with_version_line(tmp_path):
    path = tmp_path / "table.csv"
    header = ["idx", "value"]
    rows = [["0", fmt_float(0.1)], ["1", fmt_float(-1e-300)]]
    write_csv(path, header, rows)

    text = path.read_text()
    assert text.splitlines()[0] == f"# schema_version={SCHEMA_VERSION}"
    assert text.splitlines()[1] == "idx,value"

    got_header, got_rows, version = read_csv(path)
    assert got_header == header
    assert got_rows == rows
    assert version == SCHEMA_VERSION
    assert parse_float(got_rows[1][1]) == -1e-300


def test_read_csv_version_comment(tmp_path):
    # explicit version comments are honored; files without one count as current
    path = tmp_path / "old.csv"
    path.write_text("# schema_version=7\nidx\n0\n")
    assert read_csv(path) == (["idx"], [["0"]], 7)
    bare = tmp_path / "bare.csv"
    bare.write_text("idx,value\n0,1\n")
    assert read_csv(bare)[2] == SCHEMA_VERSION


def test_read_csv_requires_a_header(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# schema_version=1\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_json_round_trip(tmp_path):
    path = tmp_path / "doc.json"
    doc = {"schema_version": SCHEMA_VERSION, "theta": [0.1, float("inf")], "n": 3}
    write_json(path, doc)
    got = read_json(path)
    assert got["n"] == 3
    assert got["theta"][0] == 0.1
    assert got["theta"][1] == "inf"  # revived by parse_float at the call site


# ---------------------------------------------------------------------------
# atomic writes and hashing
# ---------------------------------------------------------------------------


def test_atomic_write_leaves_no_temp_files(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    atomic_write_text(path, "hello\n")
    assert path.read_text() == "hello\n"
    leftovers = [p for p in os.listdir(path.parent) if p != "out.txt"]
    assert leftovers == []


def test_atomic_write_replaces_existing(tmp_path):
    path = tmp_path / "out.txt"
    atomic_write_text(path, "one")
    atomic_write_text(path, "two")
    assert path.read_text() == "two"


def test_sha256_file_matches_text_hash(tmp_path):
    path = tmp_path / "blob.txt"
    atomic_write_text(path, "abc")
    assert sha256_file(path) == sha256_text("abc")
    # sha256("abc") is a published test vector
    assert sha256_text("abc") == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
