"""
Artifact bundle for one (source, target) language pair.

Holds the languages, their atom clouds, the codebook, the transfer tensor
and the Q-table, and checks that every piece was built from the others.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from codebook.book import Codebook, build_codebook, load_codebook, save_codebook
from codebook.linear_ot import DEFAULT_REG
from equalizer import Correspondence, EqualizerState, sem_scores
from gridworld.oracle import QTable, optimal_q
from language.model import N_ACTIONS, Language
from language.storage import load_language
from semantics.partition import (
    DEFAULT_SAMPLES, ObservationSampler, Partition, SampleCloud, build_cloud, load_clouds, save_clouds,
)
from semantics.transfer import (
    TransferTensor, export_tensor_csv, load_tensor, mismatch_report, save_tensor, transfer_tensor,
)
from utils.fingerprint import ProvenanceError, check_fingerprint, write_json
from utils.validators import validate_output_path

logger = logging.getLogger(__name__)

ARTIFACT_FILES = {
    "clouds": "clouds.json",
    "codebook": "codebook.json",
    "tensor": "tensor.json",
    "tensor_csv": "tensor.csv",
    "mismatch": "mismatch.json",
}


@dataclass(frozen=True, eq=False)
class Artifacts:
    source_lang: Language
    target_lang: Language
    source_cloud: SampleCloud
    target_cloud: SampleCloud
    codebook: Codebook
    tensor: TransferTensor
    qtable: QTable

    def __post_init__(self):
        self.verify()

    def verify(self):
        """
        Raises:
            ProvenanceError: If any artifact was built from different inputs
        """
        if self.source_lang.grid != self.target_lang.grid:
            raise ProvenanceError(f"Grid mismatch: {self.source_lang.grid} vs {self.target_lang.grid}")
        if self.qtable.grid != self.source_lang.grid:
            raise ProvenanceError("Q-table was solved for a different grid")
        src, tgt = self.source_lang.fingerprint, self.target_lang.fingerprint
        check_fingerprint("source cloud language", self.source_cloud.language, src)
        check_fingerprint("target cloud language", self.target_cloud.language, tgt)
        check_fingerprint("codebook source language", self.codebook.source_language, src)
        check_fingerprint("codebook target language", self.codebook.target_language, tgt)
        check_fingerprint("tensor source language", self.tensor.source_language, src)
        check_fingerprint("tensor target language", self.tensor.target_language, tgt)
        check_fingerprint("tensor codebook", self.tensor.codebook, self.codebook.fingerprint)
        if not np.array_equal(self.tensor.atom_counts, self.source_cloud.counts):
            raise ProvenanceError("Tensor atom counts differ from the source cloud")

    @property
    def grid(self):
        return self.source_lang.grid

    def equalizer(self, policy: str, kappa: Optional[Correspondence] = None) -> EqualizerState:
        return EqualizerState(
            tensor=self.tensor,
            codebook=self.codebook,
            kappa=kappa or Correspondence.same_action(),
            qtable=self.qtable,
            source_lang=self.source_lang,
            policy=policy,
            target_lang=self.target_lang,
        )


def build_artifacts(source_lang: Language, target_lang: Language, seed: int,
                    samples: int = DEFAULT_SAMPLES, reg: float = DEFAULT_REG,
                    exhaustive: bool = False) -> Artifacts:
    """
    Clouds, codebook, tensor and Q-table for a language pair.

    The two clouds draw from independent streams derived from seed.
    """
    if source_lang.grid != target_lang.grid:
        raise ProvenanceError(f"Grid mismatch: {source_lang.grid} vs {target_lang.grid}")
    sampler = ObservationSampler(source_lang.grid)
    src_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    tgt_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))

    source_cloud = build_cloud(source_lang, sampler, samples, src_rng, exhaustive=exhaustive)
    target_cloud = build_cloud(target_lang, sampler, samples, tgt_rng, exhaustive=exhaustive)
    codebook = build_codebook(source_cloud, target_cloud, reg)
    tensor = transfer_tensor(codebook, source_cloud, Partition(target_lang))

    return Artifacts(source_lang=source_lang, target_lang=target_lang, source_cloud=source_cloud,
                     target_cloud=target_cloud, codebook=codebook, tensor=tensor,
                     qtable=optimal_q(source_lang.grid))


def mismatch_summary(art: Artifacts, kappa: Optional[Correspondence] = None) -> Dict:
    """Identity-map mismatch plus the best sem map of every valid source atom."""
    kappa = kappa or Correspondence.same_action()
    state = art.equalizer("sem", kappa)
    best = {}
    for i in range(N_ACTIONS):
        if not art.tensor.valid[i]:
            continue
        scores = sem_scores(state, i)
        k = state.sem_map(i)
        best[str(i)] = {"map_id": k, "score": float(scores[k]),
                        "report": mismatch_report(art.tensor, kappa.kappa, k)}
    return {
        "kappa": kappa.as_dict(),
        "identity": mismatch_report(art.tensor, kappa.kappa, 0),
        "best_sem": best,
    }


def save_artifacts(art: Artifacts, out_dir: Union[str, Path]) -> Dict[str, Path]:
    out = Path(out_dir)
    validate_output_path(out / ARTIFACT_FILES["clouds"])
    paths = {
        "clouds": save_clouds(art.source_cloud, art.target_cloud, out / ARTIFACT_FILES["clouds"]),
        "codebook": save_codebook(art.codebook, out / ARTIFACT_FILES["codebook"]),
        "tensor": save_tensor(art.tensor, out / ARTIFACT_FILES["tensor"]),
        "tensor_csv": export_tensor_csv(art.tensor, out / ARTIFACT_FILES["tensor_csv"]),
    }
    paths["mismatch"] = out / ARTIFACT_FILES["mismatch"]
    write_json(paths["mismatch"], mismatch_summary(art))
    logger.info(f"Wrote artifacts to {out}")
    return paths


def load_artifacts(source_path: Union[str, Path], target_path: Union[str, Path],
                   artifact_dir: Union[str, Path]) -> Artifacts:
    """
    Load a language pair and the artifacts built from it.

    Raises:
        ArtifactFormatError: On malformed files
        ProvenanceError: If the files do not form one chain
    """
    source_lang = load_language(source_path)
    target_lang = load_language(target_path)
    d = Path(artifact_dir)
    source_cloud, target_cloud = load_clouds(d / ARTIFACT_FILES["clouds"], source_lang, target_lang)
    return Artifacts(
        source_lang=source_lang,
        target_lang=target_lang,
        source_cloud=source_cloud,
        target_cloud=target_cloud,
        codebook=load_codebook(d / ARTIFACT_FILES["codebook"]),
        tensor=load_tensor(d / ARTIFACT_FILES["tensor"]),
        qtable=optimal_q(source_lang.grid),
    )
