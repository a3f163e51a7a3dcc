"""
Validators, artifact schemas and fingerprints.

Run with: python tests/test_utils.py
"""

import sys
import math
from pathlib import Path

import numpy as np
import pytest

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from utils.fingerprint import ProvenanceError, canonical_json, check_fingerprint, make_fingerprint, write_json
from utils.schema_validation import ArtifactFormatError, load_artifact, parse_json_text, validate_schema
from utils.validators import (
    validate_bounds, validate_output_path, validate_positive_float, validate_positive_int, validate_snr_db,
    validate_snr_list,
)


def test_validate_positive_int():
    assert validate_positive_int(3, "n") == 3
    assert validate_positive_int(4.0, "n") == 4
    for bad in (0, -1, 2.5, True, "3", None):
        with pytest.raises(ValueError):
            validate_positive_int(bad, "n")


def test_validate_positive_float():
    assert validate_positive_float("0.5", "lr") == 0.5
    assert validate_positive_float(0, "reg", allow_zero=True) == 0.0
    for bad in (0.0, -1.0, float("nan"), float("inf"), "abc"):
        with pytest.raises(ValueError):
            validate_positive_float(bad, "lr")


def test_validate_snr():
    assert validate_snr_db("noiseless") == math.inf
    assert validate_snr_db(" INF ") == math.inf
    assert validate_snr_db("-10") == -10.0
    assert validate_snr_db(5) == 5.0
    for bad in ("loud", float("nan"), -math.inf):
        with pytest.raises(ValueError):
            validate_snr_db(bad)
    assert validate_snr_list("-10, 0,20") == [-10.0, 0.0, 20.0]
    with pytest.raises(ValueError):
        validate_snr_list(" , ")


def test_validate_bounds():
    assert validate_bounds(["-1", 1, -2, 2.5]) == (-1.0, 1.0, -2.0, 2.5)
    for bad in ((0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 1), (0, math.inf, 0, 1)):
        with pytest.raises(ValueError):
            validate_bounds(bad)


def test_validate_output_path(tmp_path):
    p = validate_output_path(tmp_path / "deep" / "er" / "file.csv")
    assert p.parent.is_dir()
    with pytest.raises(ValueError):
        validate_output_path(tmp_path)
    with pytest.raises(ValueError):
        validate_output_path("")


def test_validate_schema():
    schema = {
        "type": "object",
        "required": ["n", "xs"],
        "properties": {
            "n": {"type": "integer", "minimum": 1},
            "xs": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "tag": {"type": ["string", "null"], "minLength": 3},
        },
    }
    assert validate_schema({"n": 2, "xs": [1.0, 2], "tag": None}, schema) == (True, [])
    ok, errors = validate_schema({"n": 0, "xs": [1.0, True], "tag": "ab"}, schema)
    assert not ok
    assert "n.NUMBER_TOO_SMALL: min 1" in errors
    assert any(e.startswith("xs.[1].TYPE_MISMATCH") for e in errors)
    assert "tag.STRING_TOO_SHORT: min 3" in errors
    assert validate_schema({"xs": [1, 2]}, schema)[1] == ["MISSING_REQUIRED: n"]
    assert not validate_schema({"n": 1, "xs": [float("nan"), 1.0]}, schema)[0]


def test_parse_json_text():
    assert parse_json_text("") == (False, "EMPTY_FILE", None)
    ok, error, _ = parse_json_text('{"a": ')
    assert not ok and error.startswith("INVALID_JSON")
    assert parse_json_text('{"a": 1}') == (True, "", {"a": 1})


def test_load_artifact_errors(tmp_path):
    with pytest.raises(ArtifactFormatError) as exc:
        load_artifact(tmp_path / "none.json", "tensor")
    assert "UNREADABLE" in str(exc.value)
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 2}', encoding="utf-8")
    with pytest.raises(ArtifactFormatError) as exc:
        load_artifact(bad, "tensor")
    assert exc.value.errors[0].startswith("MISSING_REQUIRED") and "more" in str(exc.value)


def test_fingerprints():
    a = {"b": np.array([1.0, 2.0]), "a": 1}
    b = {"a": 1, "b": [1.0, 2.0]}
    assert canonical_json(a) == canonical_json(b) == '{"a":1,"b":[1.0,2.0]}'
    assert make_fingerprint(a) == make_fingerprint(b)
    assert make_fingerprint({"a": 2}) != make_fingerprint({"a": 1})
    assert len(make_fingerprint(a)) == 64


def test_write_json_is_stable(tmp_path):
    payload = {"z": np.float64(0.1), "a": [np.int64(3)]}
    write_json(tmp_path / "a.json", payload)
    write_json(tmp_path / "b.json", dict(reversed(list(payload.items()))))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_check_fingerprint():
    check_fingerprint("x", None, "f" * 64)
    check_fingerprint("x", "f" * 64, "f" * 64)
    with pytest.raises(ProvenanceError):
        check_fingerprint("x", "e" * 64, "f" * 64)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
