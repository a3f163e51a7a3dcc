# utils/schema_validation.py - Artifact Schema Validation
"""
Validates artifact files (languages, codebooks, transfer tensors, clouds)
against declarative schemas. Errors carry a dotted field path so a broken
file points at the offending entry.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union


SCHEMA_VERSION = 1


class ArtifactFormatError(ValueError):
    """Raised when an artifact file cannot be parsed or violates its schema."""

    def __init__(self, path, errors: List[str]):
        self.path = str(path)
        self.errors = list(errors)
        shown = "; ".join(self.errors[:3])
        more = f" (+{len(self.errors) - 3} more)" if len(self.errors) > 3 else ""
        super().__init__(f"Malformed artifact {self.path}: {shown}{more}")


def parse_json_text(text: str) -> Tuple[bool, str, Optional[Any]]:
    """
    Parse JSON text.

    Args:
        text: File content

    Returns:
        Tuple of (is_valid, error_message, parsed_json)
    """
    if not text or not text.strip():
        return False, "EMPTY_FILE", None

    try:
        parsed = json.loads(text)
        return True, "", parsed
    except json.JSONDecodeError as e:
        return False, f"INVALID_JSON: {str(e)[:100]}", None


_TYPE_MAP = {
    "string": str,
    "number": (int, float),
    "integer": int,
    "boolean": bool,
    "array": list,
    "object": dict,
    "null": type(None),
}


def _matches_type(data: Any, expected: str) -> bool:
    python_type = _TYPE_MAP.get(expected)
    if python_type is None:
        return True
    # bool is an int subclass; never accept it as a number
    if expected in ("number", "integer") and isinstance(data, bool):
        return False
    if expected == "number" and isinstance(data, float) and not math.isfinite(data):
        return False
    return isinstance(data, python_type)


def validate_schema(data: Any, schema: Dict) -> Tuple[bool, List[str]]:
    """
    Validate data against a simple schema.

    Schema format:
    {
        "type": "object",            # or a list of types, e.g. ["integer", "null"]
        "required": ["field1"],
        "properties": {"field1": {"type": "number", "minimum": 0}},
        "items": {...}, "minItems": 1, "maxItems": 4, "enum": [...]
    }

    Args:
        data: Data to validate
        schema: Schema definition

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors = []

    expected_type = schema.get("type")
    if expected_type:
        allowed = expected_type if isinstance(expected_type, list) else [expected_type]
        if not any(_matches_type(data, t) for t in allowed):
            errors.append(f"TYPE_MISMATCH: expected {'|'.join(allowed)}, got {type(data).__name__}")
            return False, errors

    # Object validation
    if isinstance(data, dict):
        for field in schema.get("required", []):
            if field not in data:
                errors.append(f"MISSING_REQUIRED: {field}")

        for prop_name, prop_schema in schema.get("properties", {}).items():
            if prop_name in data:
                is_valid, prop_errors = validate_schema(data[prop_name], prop_schema)
                if not is_valid:
                    errors.extend([f"{prop_name}.{e}" for e in prop_errors])

    # Array validation
    if isinstance(data, list):
        items_schema = schema.get("items")
        if items_schema:
            for i, item in enumerate(data):
                is_valid, item_errors = validate_schema(item, items_schema)
                if not is_valid:
                    errors.extend([f"[{i}].{e}" for e in item_errors])
                    # one broken row is enough to locate the problem
                    break

        min_items = schema.get("minItems", 0)
        max_items = schema.get("maxItems", float('inf'))

        if len(data) < min_items:
            errors.append(f"ARRAY_TOO_SHORT: min {min_items}, got {len(data)}")
        if len(data) > max_items:
            errors.append(f"ARRAY_TOO_LONG: max {max_items}, got {len(data)}")

    # String validation
    if isinstance(data, str):
        min_length = schema.get("minLength", 0)
        if len(data) < min_length:
            errors.append(f"STRING_TOO_SHORT: min {min_length}")

    # Number validation
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        minimum = schema.get("minimum")
        maximum = schema.get("maximum")

        if minimum is not None and data < minimum:
            errors.append(f"NUMBER_TOO_SMALL: min {minimum}")
        if maximum is not None and data > maximum:
            errors.append(f"NUMBER_TOO_LARGE: max {maximum}")

    enum_values = schema.get("enum")
    if enum_values and data not in enum_values:
        errors.append(f"INVALID_ENUM: expected one of {enum_values}")

    return len(errors) == 0, errors


def _vector(n: int) -> Dict:
    return {"type": "array", "items": {"type": "number"}, "minItems": n, "maxItems": n}


def _matrix(rows: Optional[int] = None, cols: Optional[int] = None) -> Dict:
    row = {"type": "array", "items": {"type": "number"}}
    if cols is not None:
        row.update({"minItems": cols, "maxItems": cols})
    schema = {"type": "array", "items": row, "minItems": 1}
    if rows is not None:
        schema.update({"minItems": rows, "maxItems": rows})
    return schema


_HASH = {"type": "string", "minLength": 64}
_OPTIONAL_HASH = {"type": ["string", "null"], "minLength": 64}
_VERSION = {"type": "integer", "enum": [SCHEMA_VERSION]}

ARTIFACT_SCHEMAS = {
    "language": {
        "type": "object",
        "required": ["schema_version", "actions", "grid", "obs_indexing", "encoder",
                     "decoder", "train_meta"],
        "properties": {
            "schema_version": _VERSION,
            "actions": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 4,
                "maxItems": 4,
                "enum": [["right", "down", "left", "up"]],
            },
            "grid": {
                "type": "object",
                "required": ["size", "max_steps"],
                "properties": {
                    "size": {"type": "integer", "minimum": 2},
                    "max_steps": {"type": "integer", "minimum": 1},
                },
            },
            "obs_indexing": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                          "minItems": 4, "maxItems": 4},
                "minItems": 1,
            },
            "encoder": _matrix(cols=2),
            "decoder": {
                "type": "object",
                "required": ["H", "W1", "b1", "W2", "b2", "temperature"],
                "properties": {
                    "H": {"type": "integer", "minimum": 1},
                    "W1": _matrix(cols=2),
                    "b1": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "W2": _matrix(rows=4),
                    "b2": _vector(4),
                    "temperature": {"type": "number", "minimum": 1e-12},
                },
            },
            "train_meta": {"type": "object"},
        },
    },
    "codebook": {
        "type": "object",
        "required": ["schema_version", "source_language", "target_language", "maps", "diagnostics"],
        "properties": {
            "schema_version": _VERSION,
            "source_language": _OPTIONAL_HASH,
            "target_language": _OPTIONAL_HASH,
            "maps": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["id", "i", "j", "A", "b"],
                    "properties": {
                        "id": {"type": "integer", "minimum": 0},
                        "i": {"type": ["integer", "null"], "minimum": 0, "maximum": 3},
                        "j": {"type": ["integer", "null"], "minimum": 0, "maximum": 3},
                        "A": _vector(4),
                        "b": _vector(2),
                        "fit": {"type": "object"},
                    },
                },
            },
            "diagnostics": {"type": "object"},
        },
    },
    "tensor": {
        "type": "object",
        "required": ["schema_version", "source_language", "target_language", "codebook",
                     "sample_count", "atom_counts", "counts"],
        "properties": {
            "schema_version": _VERSION,
            "source_language": _OPTIONAL_HASH,
            "target_language": _OPTIONAL_HASH,
            "codebook": _HASH,
            "sample_count": {"type": "integer", "minimum": 1},
            "atom_counts": {"type": "array", "items": {"type": "integer", "minimum": 0},
                            "minItems": 4, "maxItems": 4},
            "counts": {"type": "array", "minItems": 4, "maxItems": 4},
        },
    },
    "clouds": {
        "type": "object",
        "required": ["schema_version", "source", "target"],
        "properties": {
            "schema_version": _VERSION,
            "source": {"type": "object", "required": ["language", "obs_indices", "avg_power",
                                                      "sample_count"]},
            "target": {"type": "object", "required": ["language", "obs_indices", "avg_power",
                                                      "sample_count"]},
        },
    },
}


def load_artifact(path: Union[str, Path], kind: str) -> Dict:
    """
    Read and validate an artifact file.

    Args:
        path: File to read
        kind: Schema name in ARTIFACT_SCHEMAS

    Returns:
        Parsed document

    Raises:
        ArtifactFormatError: If the file is unreadable, not JSON, or violates the schema
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ArtifactFormatError(path, [f"UNREADABLE: {e}"])

    ok, error, parsed = parse_json_text(text)
    if not ok:
        raise ArtifactFormatError(path, [error])

    is_valid, errors = validate_schema(parsed, ARTIFACT_SCHEMAS[kind])
    if not is_valid:
        raise ArtifactFormatError(path, errors)

    return parsed
