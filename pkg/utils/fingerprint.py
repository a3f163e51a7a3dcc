import json, hashlib
from typing import Any

import numpy as np


def to_jsonable(value: Any):
    """Convert numpy containers/scalars to plain JSON types (floats keep full precision)."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def canonical_json(payload: Any) -> str:
    """Deterministic JSON text: sorted keys, no whitespace variance."""
    return json.dumps(to_jsonable(payload), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def make_fingerprint(payload: Any) -> str:
    """
    Generate a content fingerprint.

    Args:
        payload: Any JSON-serializable structure (numpy arrays allowed)

    Returns:
        sha256 hex digest of the canonical JSON text
    """
    s = canonical_json(payload)
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


def write_json(path, payload: Any):
    """Write an artifact with stable formatting so reruns are byte-identical."""
    text = json.dumps(to_jsonable(payload), sort_keys=True, ensure_ascii=False, indent=1)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text + "\n")


class ProvenanceError(ValueError):
    """Artifact was built from inputs other than the ones it is used with."""
    pass


def check_fingerprint(label: str, recorded, actual: str):
    """
    Compare a recorded input hash against the actual one.

    Raises:
        ProvenanceError: On mismatch (a missing record passes)
    """
    if recorded is not None and recorded != actual:
        raise ProvenanceError(f"{label} mismatch: artifact built from {str(recorded)[:12]}, got {actual[:12]}")
