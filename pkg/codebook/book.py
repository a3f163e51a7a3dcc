"""
Codebook of affine maps between the atoms of two languages.

Map 0 is the identity; fitted maps follow in (source atom, target atom)
lexicographic order. Pairs that cannot be fitted are skipped and recorded
in diagnostics, never imputed.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from codebook.linear_ot import (
    DEFAULT_REG, InsufficientSamplesError, LinearMap, NotPositiveDefiniteError, fit_linear_ot,
)
from language.model import N_ACTIONS
from semantics.partition import SampleCloud
from utils.fingerprint import make_fingerprint, write_json
from utils.schema_validation import SCHEMA_VERSION, ArtifactFormatError, load_artifact
from utils.validators import validate_output_path

logger = logging.getLogger(__name__)


class EmptyCodebookError(ValueError):
    """No (source atom, target atom) pair could be fitted."""
    pass


@dataclass(frozen=True, eq=False)
class Codebook:
    maps: Tuple[LinearMap, ...]
    source_language: Optional[str] = None
    target_language: Optional[str] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise EmptyCodebookError("Codebook has no maps")
        pairs = [(m.source_atom, m.target_atom) for m in self.maps if m.source_atom is not None]
        if len(pairs) != len(set(pairs)):
            raise ValueError("Codebook holds more than one map for an atom pair")

    def __len__(self) -> int:
        return len(self.maps)

    @property
    def identity_included(self) -> bool:
        return any(m.is_identity and m.source_atom is None for m in self.maps)

    def map_id(self, i: int, j: int) -> Optional[int]:
        """Id of the map fitted for pair (i, j), if any."""
        for k, m in enumerate(self.maps):
            if m.source_atom == i and m.target_atom == j:
                return k
        return None

    @property
    def fingerprint(self) -> str:
        payload = codebook_to_dict(self)
        payload.pop("diagnostics")
        return make_fingerprint(payload)


def build_codebook(source_cloud: SampleCloud, target_cloud: SampleCloud, reg: float = DEFAULT_REG,
                   include_identity: bool = True) -> Codebook:
    """
    Fit one linear OT map per pair of nonempty atoms.

    Args:
        source_cloud: Atom clouds of the transmitting language
        target_cloud: Atom clouds of the receiving language
        reg: Covariance regularizer
        include_identity: Put the identity map first (id 0)

    Returns:
        Codebook; diagnostics hold one record per empty atom and per skipped pair

    Raises:
        EmptyCodebookError: If no pair could be fitted
    """
    records: List[Dict[str, Any]] = []
    for side, cloud in (("source", source_cloud), ("target", target_cloud)):
        for i, n in enumerate(cloud.counts):
            if n == 0:
                records.append({"kind": "empty_atom", "side": side, "atom": i})
                logger.warning(f"{side} atom {i} is empty; excluded from the codebook")

    maps = [LinearMap.identity()] if include_identity else []
    fitted = 0
    for i in range(N_ACTIONS):
        if source_cloud.counts[i] == 0:
            continue
        for j in range(N_ACTIONS):
            if target_cloud.counts[j] == 0:
                continue
            try:
                maps.append(fit_linear_ot(source_cloud.points[i], target_cloud.points[j], reg,
                                          source_atom=i, target_atom=j))
                fitted += 1
            except (InsufficientSamplesError, NotPositiveDefiniteError) as e:
                records.append({"kind": "skipped_pair", "i": i, "j": j, "reason": str(e)})
                logger.warning(f"Skipping pair ({i}, {j}): {e}")

    if fitted == 0:
        raise EmptyCodebookError(f"No atom pair could be fitted ({len(records)} diagnostic records)")

    diagnostics = {"n_maps": len(maps), "reg": reg, "records": records}
    cb = Codebook(maps=tuple(maps), source_language=source_cloud.language,
                  target_language=target_cloud.language, diagnostics=diagnostics)
    logger.info(f"Built codebook with {len(maps)} maps ({fitted} fitted pairs, "
                f"{len(records)} diagnostic records)")
    return cb


def _map_to_dict(k: int, m: LinearMap) -> Dict:
    return {
        "id": k,
        "i": m.source_atom,
        "j": m.target_atom,
        "A": m.A.reshape(-1),
        "b": m.b,
        "fit": dict(m.fit),
    }


def codebook_to_dict(cb: Codebook) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "source_language": cb.source_language,
        "target_language": cb.target_language,
        "maps": [_map_to_dict(k, m) for k, m in enumerate(cb.maps)],
        "diagnostics": dict(cb.diagnostics),
    }


def save_codebook(cb: Codebook, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    write_json(p, codebook_to_dict(cb))
    logger.info(f"Saved codebook ({len(cb)} maps) to {p}")
    return p


def load_codebook(path: Union[str, Path]) -> Codebook:
    """
    Load a codebook file.

    Raises:
        ArtifactFormatError: On schema violations (field path in the message)
    """
    doc = load_artifact(path, "codebook")

    maps = []
    for k, entry in enumerate(doc["maps"]):
        if entry["id"] != k:
            raise ArtifactFormatError(path, [f"maps.[{k}].id.ORDER: expected {k}, got {entry['id']}"])
        if (entry["i"] is None) != (entry["j"] is None):
            raise ArtifactFormatError(path, [f"maps.[{k}].INVALID_PAIR: i and j must both be set or null"])
        try:
            maps.append(LinearMap(A=np.array(entry["A"]).reshape(2, 2), b=entry["b"],
                                  source_atom=entry["i"], target_atom=entry["j"],
                                  fit=entry.get("fit", {})))
        except ValueError as e:
            raise ArtifactFormatError(path, [f"maps.[{k}].INVALID_PARAMETERS: {e}"])

    try:
        return Codebook(maps=tuple(maps), source_language=doc["source_language"],
                        target_language=doc["target_language"], diagnostics=doc["diagnostics"])
    except ValueError as e:
        raise ArtifactFormatError(path, [f"maps.INVALID: {e}"])
