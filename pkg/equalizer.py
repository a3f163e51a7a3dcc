"""
Codebook-operation policies.

Given the source atom i* of the transmitted observation:

- sem: argmax_T Σ_{j∈κ(i*)} ζ_{i*→j}(T)       (align partitions)
- eff: argmax_T Σ_j ζ_{i*→j}(T) · q(a_j, o)     (maximize expected task value)

Scores are compared on integer transfer counts (every map shares the same
denominator |cloud_i*|), so ties and shifts of q resolve exactly. Ties go to
the lowest map id, and map 0 is the identity. The chosen map is applied to
the symbol before it enters the channel.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parent
sys.path.insert(0, str(BASE))

from codebook.book import Codebook
from codebook.linear_ot import apply
from gridworld.env import Observation, obs_index
from gridworld.oracle import QTable
from language.model import N_ACTIONS, Language, encode
from semantics.partition import Partition, atom_of
from semantics.transfer import EmptyAtomError, TransferTensor
from utils.fingerprint import ProvenanceError, check_fingerprint

logger = logging.getLogger(__name__)

POLICIES = ("none", "sem", "eff")


@dataclass(frozen=True)
class Correspondence:
    """κ: source atom -> set of target atoms."""
    kappa: Mapping[int, FrozenSet[int]]

    def __post_init__(self):
        normalized = {}
        for i in range(N_ACTIONS):
            targets = frozenset(int(j) for j in self.kappa.get(i, ()))
            if not targets:
                raise ValueError(f"Correspondence has no target atoms for source atom {i}")
            if not all(0 <= j < N_ACTIONS for j in targets):
                raise ValueError(f"Invalid target atoms {sorted(targets)} for source atom {i}")
            normalized[i] = targets
        object.__setattr__(self, "kappa", normalized)

    def targets(self, i: int) -> FrozenSet[int]:
        return self.kappa[i]

    def as_dict(self) -> Dict[int, list]:
        return {i: sorted(js) for i, js in self.kappa.items()}

    @classmethod
    def same_action(cls) -> "Correspondence":
        return cls({i: frozenset([i]) for i in range(N_ACTIONS)})

    @classmethod
    def everything(cls) -> "Correspondence":
        return cls({i: frozenset(range(N_ACTIONS)) for i in range(N_ACTIONS)})


@dataclass(frozen=True, eq=False)
class EqualizerState:
    tensor: TransferTensor
    codebook: Codebook
    kappa: Correspondence
    qtable: QTable
    source_lang: Language
    policy: str = "sem"
    target_lang: Optional[Language] = None
    _sem_choice: Dict[int, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"Unknown policy {self.policy!r}. Choose from {POLICIES}")
        if self.tensor.n_maps != len(self.codebook):
            raise ProvenanceError(f"Tensor covers {self.tensor.n_maps} maps, codebook has {len(self.codebook)}")
        check_fingerprint("tensor codebook", self.tensor.codebook, self.codebook.fingerprint)
        check_fingerprint("tensor source language", self.tensor.source_language, self.source_lang.fingerprint)
        check_fingerprint("codebook source language", self.codebook.source_language,
                          self.source_lang.fingerprint)
        if self.target_lang is not None:
            check_fingerprint("tensor target language", self.tensor.target_language,
                              self.target_lang.fingerprint)
            check_fingerprint("codebook target language", self.codebook.target_language,
                              self.target_lang.fingerprint)
        if self.qtable.grid != self.source_lang.grid:
            raise ProvenanceError("Q-table grid differs from the source language grid")

        # sem depends on o only through i*: one choice per valid atom
        for i in range(N_ACTIONS):
            if self.tensor.valid[i]:
                self._sem_choice[i] = int(np.argmax(sem_counts(self, i)))

    def sem_map(self, i: int) -> int:
        """Cached π_sem choice for source atom i."""
        if i not in self._sem_choice:
            raise EmptyAtomError(i)
        return self._sem_choice[i]


def source_atom(state: EqualizerState, obs: Observation) -> int:
    """i*: atom of e_s(o) under the source partition."""
    return atom_of(Partition(state.source_lang), encode(state.source_lang, obs))


def sem_counts(state: EqualizerState, i: int) -> np.ndarray:
    """Σ_{j∈κ(i)} counts[i, j, :] (integer, one per map)."""
    if not state.tensor.valid[i]:
        raise EmptyAtomError(i)
    js = sorted(state.kappa.targets(i))
    return state.tensor.counts[i, js, :].sum(axis=0)


def sem_scores(state: EqualizerState, i: int) -> np.ndarray:
    """π_sem score per map, in [0, 1]."""
    return sem_counts(state, i) / state.tensor.atom_counts[i]


def eff_scores(state: EqualizerState, obs: Observation, i: Optional[int] = None) -> np.ndarray:
    """π_eff score per map: expected q under the interpretation distribution ζ_{i*→·}(T)."""
    i = source_atom(state, obs) if i is None else i
    return _eff_weighted(state, obs, i) / state.tensor.atom_counts[i]


def _eff_weighted(state: EqualizerState, obs: Observation, i: int) -> np.ndarray:
    if not state.tensor.valid[i]:
        raise EmptyAtomError(i)
    q = state.qtable.row(obs_index(obs, state.qtable.grid))
    return state.tensor.counts[i].T.astype(np.float64) @ q


def select_sem(state: EqualizerState, obs: Observation) -> int:
    """
    Raises:
        EmptyAtomError: If the source atom of obs has no samples
    """
    return state.sem_map(source_atom(state, obs))


def select_eff(state: EqualizerState, obs: Observation) -> int:
    """
    Raises:
        EmptyAtomError: If the source atom of obs has no samples
    """
    i = source_atom(state, obs)
    return int(np.argmax(_eff_weighted(state, obs, i)))


def select(state: EqualizerState, obs: Observation) -> Optional[int]:
    """Map id chosen by the state's policy; None for policy 'none'."""
    if state.policy == "sem":
        return select_sem(state, obs)
    if state.policy == "eff":
        return select_eff(state, obs)
    return None


def equalize(state: EqualizerState, obs: Observation, symbol) -> np.ndarray:
    """Apply the selected map to e_s(o) (transmitter side, before noise)."""
    symbol = np.asarray(symbol, dtype=np.float64)
    map_id = select(state, obs)
    if map_id is None:
        return symbol.copy()
    return apply(state.codebook.maps[map_id], symbol)
