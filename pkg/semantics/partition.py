"""
Partitions of the semantic space and empirical atom clouds.

Atom i of a language is the decision region of action i under its own
interpreter: atom_of(x) = argmax decode_probs(x), lowest index on ties.
A SampleCloud bins encoded observations by atom; it is the empirical
measure every transfer and codebook estimate is computed from.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import GridConfig, Observation, new_episode, obs_index
from language.model import N_ACTIONS, Language, decode_probs, encode
from utils.fingerprint import check_fingerprint, write_json
from utils.schema_validation import SCHEMA_VERSION, ArtifactFormatError, load_artifact
from utils.validators import validate_output_path, validate_positive_int

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 10000


@dataclass(frozen=True)
class ObservationSampler:
    """μ: uniform over valid observations, drawn exactly like episode starts."""
    grid: GridConfig

    def sample_indices(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return np.array([obs_index(new_episode(self.grid, rng), self.grid) for _ in range(m)],
                        dtype=np.int64)

    def exhaustive_indices(self, m: int) -> np.ndarray:
        """Every observation m / N times, in index order."""
        n = self.grid.n_observations
        if m % n:
            raise ValueError(f"Exhaustive mode needs a multiple of {n} samples, got {m}")
        return np.tile(np.arange(n, dtype=np.int64), m // n)


@dataclass(frozen=True, eq=False)
class Partition:
    language: Language

    def atoms(self, points: np.ndarray) -> np.ndarray:
        """Atom index of every row of points [B, 2]."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if points.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return np.argmax(self.language.decoder.probs(points), axis=1)


def atom_of(partition: Partition, symbol) -> int:
    """Atom of a single symbol; raises NonFiniteSymbolError on NaN/inf."""
    return int(np.argmax(decode_probs(partition.language, symbol)))


@dataclass(frozen=True, eq=False)
class SampleCloud:
    """
    Encoded observations binned by atom.

    points[i] is [n_i, 2]; obs_indices[i] holds the observation index of
    each point (None for synthetic clouds).
    """
    points: Tuple[np.ndarray, ...]
    avg_power: float
    obs_indices: Optional[Tuple[np.ndarray, ...]] = None
    language: Optional[str] = None

    def __post_init__(self):
        if len(self.points) != N_ACTIONS:
            raise ValueError(f"Cloud needs {N_ACTIONS} atoms, got {len(self.points)}")
        pts = []
        for i, p in enumerate(self.points):
            arr = np.array(p, dtype=np.float64).reshape(-1, 2)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"Atom {i} cloud contains non-finite points")
            arr.setflags(write=False)
            pts.append(arr)
        object.__setattr__(self, "points", tuple(pts))
        if self.obs_indices is not None:
            idx = tuple(np.array(o, dtype=np.int64).reshape(-1) for o in self.obs_indices)
            if [len(o) for o in idx] != [len(p) for p in pts]:
                raise ValueError("obs_indices do not match the cloud sizes")
            object.__setattr__(self, "obs_indices", idx)

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(p) for p in self.points], dtype=np.int64)

    @property
    def sample_count(self) -> int:
        return int(self.counts.sum())

    @property
    def nonempty(self) -> List[int]:
        return [i for i, n in enumerate(self.counts) if n > 0]

    @property
    def weights(self) -> np.ndarray:
        """Fraction of the cloud in each atom."""
        return self.counts / self.sample_count

    @classmethod
    def from_points(cls, points: Sequence, avg_power: Optional[float] = None) -> "SampleCloud":
        """Synthetic cloud from per-atom point lists (avg power computed when omitted)."""
        arrays = [np.array(p, dtype=np.float64).reshape(-1, 2) for p in points]
        if avg_power is None:
            stacked = np.concatenate(arrays)
            avg_power = float(np.mean(np.sum(stacked ** 2, axis=1))) if len(stacked) else 0.0
        return cls(points=tuple(arrays), avg_power=avg_power)


def _bin(lang: Language, indices: np.ndarray) -> SampleCloud:
    symbols = lang.encoder.table[indices]
    atoms = Partition(lang).atoms(symbols)
    order = [np.flatnonzero(atoms == i) for i in range(N_ACTIONS)]
    return SampleCloud(
        points=tuple(symbols[o] for o in order),
        avg_power=float(np.mean(np.sum(symbols ** 2, axis=1))),
        obs_indices=tuple(indices[o] for o in order),
        language=lang.fingerprint,
    )


def build_cloud(lang: Language, sampler: ObservationSampler, m: int = DEFAULT_SAMPLES,
                rng: Optional[np.random.Generator] = None, exhaustive: bool = False) -> SampleCloud:
    """
    Encode m observations drawn from μ and bin them by lang's own atoms.

    Args:
        lang: Language whose generator and partition are used
        sampler: Observation distribution
        m: Number of samples
        rng: Random stream (unused in exhaustive mode)
        exhaustive: Enumerate every observation m / N times instead of sampling

    Returns:
        SampleCloud with avg_power = mean ‖x‖² over the m symbols
    """
    m = validate_positive_int(m, "samples")
    if sampler.grid != lang.grid:
        raise ValueError(f"Sampler grid {sampler.grid} differs from language grid {lang.grid}")

    if exhaustive:
        indices = sampler.exhaustive_indices(m)
    else:
        if rng is None:
            raise ValueError("rng is required unless exhaustive=True")
        indices = sampler.sample_indices(m, rng)

    cloud = _bin(lang, indices)
    empty = [i for i, n in enumerate(cloud.counts) if n == 0]
    if empty:
        logger.warning(f"Language {cloud.language[:12]} has empty atoms {empty} over {m} samples")
    logger.info(f"Built cloud over {m} samples: counts={cloud.counts.tolist()}, "
                f"avg_power={cloud.avg_power:.4f}")
    return cloud


def atom_membership_prob(lang: Language, obs: Observation) -> np.ndarray:
    """μ_e(A_i | o): one-hot at atom_of(e(o)) for a deterministic generator."""
    out = np.zeros(N_ACTIONS)
    out[atom_of(Partition(lang), encode(lang, obs))] = 1.0
    return out


def cloud_to_dict(cloud: SampleCloud) -> Dict:
    if cloud.obs_indices is None:
        raise ValueError("Synthetic clouds have no observation indices to save")
    return {
        "language": cloud.language,
        "obs_indices": [o for o in cloud.obs_indices],
        "avg_power": cloud.avg_power,
        "sample_count": cloud.sample_count,
    }


def save_clouds(source: SampleCloud, target: SampleCloud, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    write_json(p, {
        "schema_version": SCHEMA_VERSION,
        "source": cloud_to_dict(source),
        "target": cloud_to_dict(target),
    })
    logger.info(f"Saved clouds to {p}")
    return p


def _cloud_from_dict(doc: Dict, lang: Language, side: str, path) -> SampleCloud:
    check_fingerprint(f"{side} cloud language", doc["language"], lang.fingerprint)

    raw = doc["obs_indices"]
    n = lang.grid.n_observations
    if len(raw) != N_ACTIONS or not all(isinstance(o, list) for o in raw):
        raise ArtifactFormatError(path, [f"{side}.obs_indices.ARRAY_LENGTH: expected {N_ACTIONS} lists"])
    for i, o in enumerate(raw):
        if any(isinstance(k, bool) or not isinstance(k, int) or not 0 <= k < n for k in o):
            raise ArtifactFormatError(path, [f"{side}.obs_indices.[{i}].INVALID_INDEX"])

    indices = np.concatenate([np.array(o, dtype=np.int64) for o in raw])
    cloud = _bin(lang, indices)
    if not all(np.array_equal(cloud.obs_indices[i], raw[i]) for i in range(N_ACTIONS)):
        raise ArtifactFormatError(path, [f"{side}.obs_indices.ATOM_MISMATCH: points do not bin "
                                         f"to their stored atoms"])
    # keep the stored power: it is the calibration the tensor was evaluated with
    return SampleCloud(points=cloud.points, avg_power=float(doc["avg_power"]),
                       obs_indices=cloud.obs_indices, language=cloud.language)


def load_clouds(path: Union[str, Path], source_lang: Language,
                target_lang: Language) -> Tuple[SampleCloud, SampleCloud]:
    """
    Load both clouds, re-deriving points from the languages.

    Raises:
        ArtifactFormatError: On schema violations or indices that bin elsewhere
        ProvenanceError: If a cloud was built from a different language
    """
    doc = load_artifact(path, "clouds")
    return (_cloud_from_dict(doc["source"], source_lang, "source", path),
            _cloud_from_dict(doc["target"], target_lang, "target", path))
