"""
Codebook-operation policies (sem / eff) and their provenance checks.

The languages are hand-built: the oracle language points every observation
at its optimal direction, and the rotated language does the same in a frame
turned by 90°, so without equalization every atom is misread.

Run with: python tests/test_equalizer.py
"""

import sys
from pathlib import Path

import numpy as np
import pytest

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from codebook.book import Codebook, build_codebook
from codebook.linear_ot import LinearMap
from equalizer import (
    Correspondence, EqualizerState, eff_scores, equalize, select, select_eff, select_sem, sem_scores,
    source_atom,
)
from gridworld.env import GridConfig, Observation, enumerate_observations
from gridworld.oracle import QTable, optimal_q
from harness.artifacts import build_artifacts
from language.model import encode, greedy_action
from semantics.partition import ObservationSampler, Partition, SampleCloud, atom_of, build_cloud
from semantics.transfer import EmptyAtomError, transfer_tensor
from utils.fingerprint import ProvenanceError

from fixtures import oracle_actions, oracle_language, rotated_language

GRID = GridConfig()
SAMPLER = ObservationSampler(GRID)
UP_OBS = Observation((2, 2), (0, 2))
RIGHT_OBS = Observation((2, 2), (2, 4))


@pytest.fixture(scope="module")
def cross():
    return build_artifacts(oracle_language(), rotated_language(), seed=0, samples=600, exhaustive=True)


@pytest.fixture(scope="module")
def matched():
    lang = oracle_language()
    return build_artifacts(lang, lang, seed=0, samples=600, exhaustive=True)


def _with_q(art, q: np.ndarray, policy: str = "eff") -> EqualizerState:
    return EqualizerState(tensor=art.tensor, codebook=art.codebook, kappa=Correspondence.same_action(),
                          qtable=QTable(grid=GRID, q=q), source_lang=art.source_lang, policy=policy,
                          target_lang=art.target_lang)


def test_correspondence_validation():
    assert Correspondence.same_action().targets(2) == frozenset([2])
    assert Correspondence({0: [1, 2], 1: [0], 2: (3,), 3: {3}}).as_dict()[0] == [1, 2]
    with pytest.raises(ValueError):
        Correspondence({0: [0], 1: [1], 2: [2]})
    with pytest.raises(ValueError):
        Correspondence({0: [4], 1: [1], 2: [2], 3: [3]})


def test_source_atom_is_the_optimal_action(cross):
    state = cross.equalizer("sem")
    actions = oracle_actions(GRID)
    for k, obs in enumerate(enumerate_observations(GRID)):
        assert source_atom(state, obs) == actions[k]


def test_matched_languages_select_identity(matched):
    sem, eff = matched.equalizer("sem"), matched.equalizer("eff")
    for obs in enumerate_observations(GRID):
        assert select_sem(sem, obs) == 0
        assert select_eff(eff, obs) == 0
        x = encode(matched.source_lang, obs)
        assert np.array_equal(equalize(sem, obs, x), x)


def test_everything_correspondence_selects_identity(cross):
    state = cross.equalizer("sem", Correspondence.everything())
    for i in range(4):
        assert np.all(sem_scores(state, i) == 1.0)
        assert state.sem_map(i) == 0


def test_sem_restores_the_interpretation(cross):
    state = cross.equalizer("sem")
    for i in range(4):
        k = state.sem_map(i)
        assert k != 0 and sem_scores(state, i)[k] == 1.0
        assert sem_scores(state, i)[0] == 0.0
    part = Partition(cross.target_lang)
    actions = oracle_actions(GRID)
    for k, obs in enumerate(enumerate_observations(GRID)):
        y = equalize(state, obs, encode(cross.source_lang, obs))
        assert atom_of(part, y) == actions[k]


def test_sem_prefers_the_aligning_map(cross):
    src, tgt = cross.source_lang, cross.target_lang
    aligned = cross.codebook.maps[cross.codebook.map_id(0, 0)]
    cb = Codebook(maps=(LinearMap.identity(), aligned), source_language=src.fingerprint,
                  target_language=tgt.fingerprint)
    tensor = transfer_tensor(cb, cross.source_cloud, Partition(tgt))
    state = EqualizerState(tensor=tensor, codebook=cb, kappa=Correspondence.same_action(),
                           qtable=optimal_q(GRID), source_lang=src, target_lang=tgt)
    assert sem_scores(state, 0).tolist() == [0.0, 1.0]
    assert select_sem(state, RIGHT_OBS) == 1
    assert select(state, RIGHT_OBS) == 1


def test_eff_picks_an_optimal_action(cross):
    state = cross.equalizer("eff")
    q = optimal_q(GRID)
    for k, obs in enumerate(enumerate_observations(GRID)):
        y = equalize(state, obs, encode(cross.source_lang, obs))
        assert q.q[k, greedy_action(cross.target_lang, y)] == q.q[k].max()


def test_eff_scores_lie_within_q_range(cross):
    state = cross.equalizer("eff")
    q = optimal_q(GRID)
    for k, obs in enumerate(enumerate_observations(GRID)[::7]):
        scores = eff_scores(state, obs)
        row = q.row(k * 7)
        assert np.all(scores >= row.min() - 1e-12) and np.all(scores <= row.max() + 1e-12)
    for i in range(4):
        s = sem_scores(state, i)
        assert np.all((s >= 0) & (s <= 1))


def test_eff_invariant_to_positive_affine_q(cross):
    q = optimal_q(GRID).q
    base = _with_q(cross, q)
    shifted = _with_q(cross, q + 7.0)
    scaled = _with_q(cross, 2.5 * q - 3.0)
    for obs in enumerate_observations(GRID):
        k = select_eff(base, obs)
        assert select_eff(shifted, obs) == k
        assert select_eff(scaled, obs) == k


def test_eff_constant_q_selects_identity(cross):
    state = _with_q(cross, np.full((GRID.n_observations, 4), -2.0))
    for obs in enumerate_observations(GRID)[::11]:
        assert select_eff(state, obs) == 0


def test_none_policy_passes_symbols_through(cross):
    state = cross.equalizer("none")
    x = encode(cross.source_lang, RIGHT_OBS)
    assert select(state, RIGHT_OBS) is None
    y = equalize(state, RIGHT_OBS, x)
    assert np.array_equal(y, x) and y is not x


def test_empty_source_atom_raises():
    src, tgt = oracle_language(), rotated_language()
    full = build_cloud(src, SAMPLER, 600, exhaustive=True)
    partial = SampleCloud.from_points([full.points[0], full.points[1], full.points[2], []])
    target = build_cloud(tgt, SAMPLER, 600, exhaustive=True)
    cb = build_codebook(partial, target)
    tensor = transfer_tensor(cb, partial, Partition(tgt))
    for policy in ("sem", "eff"):
        state = EqualizerState(tensor=tensor, codebook=cb, kappa=Correspondence.same_action(),
                               qtable=optimal_q(GRID), source_lang=src, policy=policy, target_lang=tgt)
        assert select(state, RIGHT_OBS) is not None
        with pytest.raises(EmptyAtomError):
            select(state, UP_OBS)
    with pytest.raises(EmptyAtomError):
        sem_scores(state, 3)


def test_state_rejects_foreign_tensor(cross, matched):
    with pytest.raises(ProvenanceError):
        EqualizerState(tensor=matched.tensor, codebook=cross.codebook, kappa=Correspondence.same_action(),
                       qtable=optimal_q(GRID), source_lang=cross.source_lang)
    with pytest.raises(ProvenanceError):
        EqualizerState(tensor=cross.tensor, codebook=cross.codebook, kappa=Correspondence.same_action(),
                       qtable=optimal_q(GRID), source_lang=cross.source_lang,
                       target_lang=cross.source_lang)
    with pytest.raises(ValueError):
        cross.equalizer("random")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
