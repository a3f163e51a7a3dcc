"""
Language artifact: one JSON document per trained language.

{schema_version, actions, grid{size,max_steps}, obs_indexing, encoder (N×2),
 decoder{H, W1, b1, W2, b2, temperature}, train_meta}

Floats are written with their shortest round-trip repr, so load(save(x)) is
bit-exact.
"""

import logging
import sys
from pathlib import Path
from typing import Dict, Union

import numpy as np

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import GridConfig, ACTION_NAMES, observation_rows
from language.model import Decoder, Encoder, Language
from utils.fingerprint import make_fingerprint, write_json
from utils.schema_validation import SCHEMA_VERSION, ArtifactFormatError, load_artifact
from utils.validators import validate_output_path

logger = logging.getLogger(__name__)


def language_to_dict(lang: Language) -> Dict:
    d = lang.decoder
    return {
        "schema_version": SCHEMA_VERSION,
        "actions": list(ACTION_NAMES),
        "grid": lang.grid.to_dict(),
        "obs_indexing": observation_rows(lang.grid),
        "encoder": lang.encoder.table,
        "decoder": {
            "H": d.hidden_units,
            "W1": d.W1,
            "b1": d.b1,
            "W2": d.W2,
            "b2": d.b2,
            "temperature": d.temperature,
        },
        "train_meta": dict(lang.train_meta),
    }


def language_fingerprint(lang: Language) -> str:
    """Content hash over the parameters (train_meta excluded)."""
    payload = language_to_dict(lang)
    payload.pop("train_meta")
    return make_fingerprint(payload)


def save_language(lang: Language, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    write_json(p, language_to_dict(lang))
    logger.info(f"Saved language to {p} (fingerprint {language_fingerprint(lang)[:12]})")
    return p


def load_language(path: Union[str, Path]) -> Language:
    """
    Load and validate a language file.

    Raises:
        ArtifactFormatError: On unreadable/truncated files or schema violations
    """
    doc = load_artifact(path, "language")

    try:
        grid = GridConfig.from_mapping(doc["grid"])
    except ValueError as e:
        raise ArtifactFormatError(path, [f"grid.INVALID: {e}"])

    errors = []
    if doc["obs_indexing"] != observation_rows(grid):
        errors.append("obs_indexing.ORDER_MISMATCH: differs from the canonical observation order")
    if len(doc["encoder"]) != grid.n_observations:
        errors.append(f"encoder.ARRAY_LENGTH: expected {grid.n_observations}, got {len(doc['encoder'])}")

    dec = doc["decoder"]
    H = dec["H"]
    if len(dec["W1"]) != H:
        errors.append(f"decoder.W1.ARRAY_LENGTH: expected {H}, got {len(dec['W1'])}")
    if len(dec["b1"]) != H:
        errors.append(f"decoder.b1.ARRAY_LENGTH: expected {H}, got {len(dec['b1'])}")
    for k, row in enumerate(dec["W2"]):
        if len(row) != H:
            errors.append(f"decoder.W2.[{k}].ARRAY_LENGTH: expected {H}, got {len(row)}")
            break
    if errors:
        raise ArtifactFormatError(path, errors)

    try:
        decoder = Decoder(
            W1=np.array(dec["W1"], dtype=np.float64),
            b1=np.array(dec["b1"], dtype=np.float64),
            W2=np.array(dec["W2"], dtype=np.float64),
            b2=np.array(dec["b2"], dtype=np.float64),
            temperature=dec["temperature"],
        )
        lang = Language(
            encoder=Encoder(np.array(doc["encoder"], dtype=np.float64)),
            decoder=decoder,
            grid=grid,
            train_meta=doc["train_meta"],
        )
    except ValueError as e:
        raise ArtifactFormatError(path, [f"INVALID_PARAMETERS: {e}"])

    logger.debug(f"Loaded language {path} (fingerprint {language_fingerprint(lang)[:12]})")
    return lang
