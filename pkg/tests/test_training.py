"""
Policy-gradient training of a language.

Fast tests run on a 3x3 grid; the full-size acceptance run is gated by
SEMEQ_SLOW_TESTS=1.

Run with: python tests/test_training.py
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import torch

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from channel import ChannelConfig
from gridworld.env import GridConfig
from gridworld.oracle import mean_optimal_length
from language import training
from language.model import init_language
from language.training import (
    PARAM_NAMES, MovingBaseline, RolloutBatch, TrainConfig, TrainingDivergedError, collect_rollouts,
    greedy_mean_length, greedy_rollouts, scale_advantages, surrogate_loss, train_language,
)

from fixtures import SLOW, constant_language, oracle_language

SMALL_GRID = GridConfig(size=3, max_steps=8)
TINY = TrainConfig(episodes=64, batch_size=16, hidden_units=4, log_every=1)


def _frozen_batch(seed: int = 0):
    rng = np.random.default_rng(seed)
    lang = init_language(SMALL_GRID, 4, rng)
    params = training._numpy_params(lang)
    batch = collect_rollouts(params, SMALL_GRID, 8, ChannelConfig.from_snr(5.0, 2.0), 1.0, rng)
    batch.advantages = rng.standard_normal(batch.obs.size)
    return params, batch


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(episodes=0)
    with pytest.raises(ValueError):
        TrainConfig(baseline=1.0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    cfg = TrainConfig.from_mapping({"episodes": 10, "train_snr_db": "noiseless", "unknown": 1})
    assert cfg.episodes == 10 and cfg.train_snr_db == float("inf")
    assert TrainConfig.from_mapping(cfg.to_dict()) == cfg


def test_train_config_update_schedule_fields():
    for bad in ({"discount": 0.0}, {"discount": 1.5}, {"final_lr_fraction": 0.0},
                {"final_lr_fraction": 2.0}, {"normalize_advantages": "yes"}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    default = TrainConfig()
    assert default.batch_size == 8 and default.n_updates == 7500
    assert TrainConfig(episodes=17, batch_size=8).n_updates == 3
    plain = TrainConfig(discount=1.0, normalize_advantages=False, final_lr_fraction=1.0)
    assert plain.discount == 1.0 and plain.n_updates == plain.episodes // plain.batch_size


def test_collect_rollouts_shapes():
    params, batch = _frozen_batch()
    assert batch.lengths.shape == (8,)
    assert batch.obs.size == batch.lengths.sum() == batch.actions.size == batch.returns.size
    assert batch.noise.shape == (batch.obs.size, 2)
    assert np.all(batch.lengths <= SMALL_GRID.max_steps)
    # a captured episode ends on a zero-reward step, so its first return-to-go is 1 - length
    assert np.all(batch.returns <= 0)


def test_rollout_returns_match_lengths_when_noiseless():
    lang = oracle_language(SMALL_GRID)
    rng = np.random.default_rng(3)
    batch = collect_rollouts(training._numpy_params(lang), SMALL_GRID, 20,
                             ChannelConfig.noiseless_channel(), 1.0, rng)
    assert np.all(batch.noise == 0)
    # time-major: the first len(lengths) transitions are the episode starts
    starts = batch.returns[: batch.lengths.size]
    expected = np.where(batch.captured, 1 - batch.lengths, -batch.lengths)
    assert np.array_equal(starts, expected)


def test_discounted_returns_when_noiseless():
    lang = oracle_language(SMALL_GRID)
    gamma = 0.9
    rng = np.random.default_rng(3)
    batch = collect_rollouts(training._numpy_params(lang), SMALL_GRID, 20,
                             ChannelConfig.noiseless_channel(), 1.0, rng, gamma)
    assert batch.captured.all()
    starts = batch.returns[: batch.lengths.size]
    # every step costs -1 except the capturing one
    expected = -(1 - gamma ** (batch.lengths - 1)) / (1 - gamma)
    assert np.allclose(starts, expected)
    # shorter episodes have strictly higher discounted return
    order = np.argsort(batch.lengths)
    assert np.all(np.diff(starts[order])[np.diff(batch.lengths[order]) > 0] < 0)


def test_scale_advantages():
    rng = np.random.default_rng(0)
    adv = 5.0 * rng.standard_normal(200) - 3.0
    scaled = scale_advantages(adv)
    assert np.std(scaled) == pytest.approx(1.0)
    assert np.allclose(scaled * np.std(adv), adv)
    flat = np.full(4, 2.5)
    assert np.array_equal(scale_advantages(flat), flat)


def test_surrogate_gradient_matches_finite_differences():
    params_np, batch = _frozen_batch(seed=1)
    params = {k: torch.tensor(v, dtype=torch.float64, requires_grad=True) for k, v in params_np.items()}
    loss = surrogate_loss(params, batch, entropy_bonus=0.05, temperature=1.0)
    loss.backward()

    def value(name, idx, delta):
        shifted = {k: torch.tensor(v, dtype=torch.float64) for k, v in params_np.items()}
        shifted[name][idx] += delta
        return float(surrogate_loss(shifted, batch, 0.05, 1.0))

    rng = np.random.default_rng(2)
    eps = 1e-6
    checked = 0
    for name in PARAM_NAMES:
        shape = params_np[name].shape
        if name == "encoder":
            rows = np.unique(batch.obs)
            picks = [(int(r), int(c)) for r in rng.choice(rows, 3) for c in (0, 1)]
        else:
            picks = [tuple(int(i) for i in np.unravel_index(k, shape))
                     for k in rng.choice(int(np.prod(shape)), min(4, int(np.prod(shape))), replace=False)]
        for idx in picks:
            numeric = (value(name, idx, eps) - value(name, idx, -eps)) / (2 * eps)
            analytic = float(params[name].grad[idx])
            assert abs(numeric - analytic) <= 1e-4 * max(abs(numeric), abs(analytic)) + 1e-8, (name, idx)
            checked += 1
    assert checked >= 10


def test_unvisited_encoder_rows_get_no_gradient():
    params_np, batch = _frozen_batch(seed=4)
    params = {k: torch.tensor(v, dtype=torch.float64, requires_grad=True) for k, v in params_np.items()}
    surrogate_loss(params, batch, 0.01, 1.0).backward()
    unseen = np.setdiff1d(np.arange(SMALL_GRID.n_observations), batch.obs)
    assert unseen.size > 0
    assert torch.all(params["encoder"].grad[torch.as_tensor(unseen)] == 0)


def test_moving_baseline():
    base = MovingBaseline(3, decay=0.5)
    batch = RolloutBatch(obs=np.array([0, 0, 1]), noise=np.zeros((3, 2)), actions=np.zeros(3, int),
                         returns=np.array([-4.0, -2.0, -1.0]), advantages=np.zeros(3),
                         lengths=np.array([3]), captured=np.array([True]))
    adv = base.advantages(batch)
    # first visits start at the batch mean
    assert np.allclose(adv, [-1.0, 1.0, 0.0])
    assert base.value[0] == pytest.approx(-3.0) and base.value[1] == pytest.approx(-1.0)
    assert base.value[2] == 0.0 and not base.seen[2]

    second = RolloutBatch(obs=np.array([0]), noise=np.zeros((1, 2)), actions=np.zeros(1, int),
                          returns=np.array([-1.0]), advantages=np.zeros(1),
                          lengths=np.array([1]), captured=np.array([True]))
    assert base.advantages(second)[0] == pytest.approx(2.0)
    assert base.value[0] == pytest.approx(0.5 * -3.0 + 0.5 * -1.0)


def test_greedy_mean_length_of_oracle_is_optimal():
    for grid in (SMALL_GRID, GridConfig()):
        assert greedy_mean_length(oracle_language(grid)) == pytest.approx(mean_optimal_length(grid))


def test_greedy_mean_length_caps_failures():
    # symbol (0,0) decodes to 'right' everywhere: the scout gets stuck on most starts
    lang = constant_language(SMALL_GRID, symbol=(0.0, 0.0))
    value = greedy_mean_length(lang)
    assert mean_optimal_length(SMALL_GRID) < value <= SMALL_GRID.max_steps


def test_greedy_rollouts_report_success():
    lengths, captured = greedy_rollouts(oracle_language(SMALL_GRID))
    assert lengths.shape == captured.shape == (SMALL_GRID.n_observations,)
    assert captured.all()

    lengths, captured = greedy_rollouts(constant_language(SMALL_GRID, symbol=(0.0, 0.0)))
    assert 0.0 < captured.mean() < 1.0
    assert np.all(lengths[~captured] == SMALL_GRID.max_steps)


def test_train_language_is_deterministic():
    a = train_language(SMALL_GRID, TINY, seed=7)
    b = train_language(SMALL_GRID, TINY, seed=7)
    c = train_language(SMALL_GRID, TINY, seed=8)
    assert a == b
    assert not np.array_equal(a.encoder.table, c.encoder.table)

    meta = a.train_meta
    assert meta["seed"] == 7 and meta["train_config"] == TINY.to_dict()
    assert meta["length_ratio"] == pytest.approx(meta["greedy_mean_length"] / meta["mean_optimal_length"])
    assert len(meta["inputs_hash"]) == 64
    assert 0.0 <= meta["greedy_success_rate"] <= 1.0


def test_train_language_reports_divergence(monkeypatch):
    def poisoned(params, batch, entropy_bonus, temperature):
        return params["W1"].sum() * float("nan")

    monkeypatch.setattr(training, "surrogate_loss", poisoned)
    with pytest.raises(TrainingDivergedError) as exc:
        train_language(SMALL_GRID, TINY, seed=0)
    assert exc.value.episode == TINY.batch_size


@SLOW
def test_training_reaches_near_optimal_length():
    grid = GridConfig()
    for seed in (1, 2):
        lang = train_language(grid, TrainConfig(), seed)
        assert lang.train_meta["length_ratio"] <= 1.3
        assert lang.train_meta["greedy_success_rate"] >= 0.99


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
