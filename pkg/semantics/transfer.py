"""
Information transfer ζ_{i→j}(T) between partitions.

ζ̂_{i→j}(T) = |{x ∈ cloud_i : atom_of(target, T(x)) = j}| / |cloud_i|

The tensor keeps the integer counts; ζ is derived by dividing each row by
its source-atom count, so every valid row sums to exactly 1.
"""

import csv
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from codebook.book import Codebook, EmptyCodebookError
from codebook.linear_ot import LinearMap, apply
from language.model import N_ACTIONS
from semantics.partition import Partition, SampleCloud
from utils.fingerprint import write_json
from utils.schema_validation import SCHEMA_VERSION, ArtifactFormatError, load_artifact
from utils.validators import validate_output_path

logger = logging.getLogger(__name__)

TENSOR_CSV_COLUMNS = ["source_atom", "target_atom", "map_id", "zeta", "samples"]


class EmptyAtomError(ValueError):
    """Transfer requested out of a source atom with no samples."""

    def __init__(self, atom, message: Optional[str] = None):
        self.atom = atom
        super().__init__(message or f"Source atom {atom} is empty; its transfer is undefined")


def _transfer_counts(T: LinearMap, points: np.ndarray, target: Partition) -> np.ndarray:
    return np.bincount(target.atoms(apply(T, points)), minlength=N_ACTIONS)


def info_transfer(T: LinearMap, source_cloud: SampleCloud, i: int, target_partition: Partition,
                  j: int) -> float:
    """
    Fraction of source atom i's samples that T carries into target atom j.

    Raises:
        EmptyAtomError: If source atom i has no samples
    """
    points = source_cloud.points[i]
    if len(points) == 0:
        raise EmptyAtomError(i)
    return float(_transfer_counts(T, points, target_partition)[j]) / len(points)


@dataclass(frozen=True, eq=False)
class TransferTensor:
    """
    counts[i, j, k]: samples of source atom i that map k sends into target atom j.
    atom_counts[i]: samples in source atom i (0 marks an invalid row).
    """
    counts: np.ndarray
    atom_counts: np.ndarray
    codebook: str
    source_language: Optional[str] = None
    target_language: Optional[str] = None

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        atom_counts = np.array(self.atom_counts, dtype=np.int64)
        if counts.ndim != 3 or counts.shape[:2] != (N_ACTIONS, N_ACTIONS) or counts.shape[2] < 1:
            raise ValueError(f"counts must be [4, 4, K], got {counts.shape}")
        if atom_counts.shape != (N_ACTIONS,) or np.any(atom_counts < 0) or np.any(counts < 0):
            raise ValueError("counts must be nonnegative with one atom count per source atom")
        if not np.array_equal(counts.sum(axis=1), np.repeat(atom_counts[:, None], counts.shape[2], 1)):
            raise ValueError("Every map must distribute each source atom's samples exactly")
        counts.setflags(write=False)
        atom_counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "atom_counts", atom_counts)

    @property
    def n_maps(self) -> int:
        return self.counts.shape[2]

    @property
    def sample_count(self) -> int:
        return int(self.atom_counts.sum())

    @property
    def valid(self) -> np.ndarray:
        return self.atom_counts > 0

    @property
    def zeta(self) -> np.ndarray:
        """ζ[i, j, k] in [0, 1]; invalid rows are all zero."""
        denom = np.where(self.valid, self.atom_counts, 1)[:, None, None]
        return self.counts / denom

    def row(self, i: int) -> np.ndarray:
        """ζ[i, :, :] for a valid source atom."""
        if not self.valid[i]:
            raise EmptyAtomError(i)
        return self.counts[i] / self.atom_counts[i]


def transfer_tensor(codebook: Codebook, source_cloud: SampleCloud,
                    target_partition: Partition) -> TransferTensor:
    """
    ζ for every source atom, target atom and codebook entry.

    Raises:
        EmptyCodebookError: If the codebook has no maps
        EmptyAtomError: If every source atom is empty
    """
    if len(codebook) == 0:
        raise EmptyCodebookError("Codebook has no maps")
    atom_counts = source_cloud.counts
    if not np.any(atom_counts):
        raise EmptyAtomError("all", "Every source atom is empty")

    counts = np.zeros((N_ACTIONS, N_ACTIONS, len(codebook)), dtype=np.int64)
    for k, T in enumerate(codebook.maps):
        for i in source_cloud.nonempty:
            counts[i, :, k] = _transfer_counts(T, source_cloud.points[i], target_partition)

    invalid = [i for i in range(N_ACTIONS) if atom_counts[i] == 0]
    if invalid:
        logger.warning(f"Source atoms {invalid} are empty; their rows are marked invalid")

    tensor = TransferTensor(
        counts=counts,
        atom_counts=atom_counts,
        codebook=codebook.fingerprint,
        source_language=source_cloud.language,
        target_language=target_partition.language.fingerprint,
    )
    logger.info(f"Computed transfer tensor: {len(codebook)} maps over {tensor.sample_count} samples")
    return tensor


def export_tensor_csv(tensor: TransferTensor, path: Union[str, Path]) -> Path:
    """One row per (valid source atom, target atom, map)."""
    p = validate_output_path(path)
    zeta = tensor.zeta
    with open(p, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TENSOR_CSV_COLUMNS)
        for i in range(N_ACTIONS):
            if not tensor.valid[i]:
                continue
            for j in range(N_ACTIONS):
                for k in range(tensor.n_maps):
                    writer.writerow([i, j, k, repr(float(zeta[i, j, k])), int(tensor.atom_counts[i])])
    return p


def save_tensor(tensor: TransferTensor, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    write_json(p, {
        "schema_version": SCHEMA_VERSION,
        "source_language": tensor.source_language,
        "target_language": tensor.target_language,
        "codebook": tensor.codebook,
        "sample_count": tensor.sample_count,
        "atom_counts": tensor.atom_counts,
        "counts": tensor.counts,
    })
    logger.info(f"Saved transfer tensor to {p}")
    return p


def load_tensor(path: Union[str, Path]) -> TransferTensor:
    """
    Raises:
        ArtifactFormatError: On schema violations or inconsistent counts
    """
    doc = load_artifact(path, "tensor")
    if sum(doc["atom_counts"]) != doc["sample_count"]:
        raise ArtifactFormatError(path, ["sample_count.MISMATCH: differs from the sum of atom_counts"])
    try:
        return TransferTensor(
            counts=np.array(doc["counts"], dtype=np.int64),
            atom_counts=doc["atom_counts"],
            codebook=doc["codebook"],
            source_language=doc["source_language"],
            target_language=doc["target_language"],
        )
    except (ValueError, TypeError) as e:
        raise ArtifactFormatError(path, [f"counts.INVALID: {e}"])


def mismatch_report(tensor: TransferTensor, kappa: Optional[Mapping[int, Iterable[int]]] = None,
                    map_id: int = 0) -> Dict:
    """
    Alignment between the two partitions under one codebook entry.

    With map 0 (identity) this is the raw semantic mismatch of the two
    languages: ζ matrix, per-atom score Σ_{j∈κ(i)} ζ_{i→j} and the
    source-weighted alignment Σ_i w_i · score_i over valid atoms.
    """
    if not 0 <= map_id < tensor.n_maps:
        raise ValueError(f"map_id {map_id} out of range for {tensor.n_maps} maps")
    kappa = kappa or {i: (i,) for i in range(N_ACTIONS)}

    zeta = tensor.zeta[:, :, map_id]
    scores: List[Optional[float]] = []
    for i in range(N_ACTIONS):
        if tensor.valid[i]:
            scores.append(float(sum(tensor.counts[i, j, map_id] for j in kappa[i]) / tensor.atom_counts[i]))
        else:
            scores.append(None)

    weights = tensor.atom_counts / tensor.sample_count
    alignment = sum(weights[i] * s for i, s in enumerate(scores) if s is not None)
    return {
        "map_id": map_id,
        "zeta": zeta,
        "atom_scores": scores,
        "atom_weights": weights,
        "alignment": float(alignment),
        "invalid_atoms": [i for i in range(N_ACTIONS) if not tensor.valid[i]],
    }
