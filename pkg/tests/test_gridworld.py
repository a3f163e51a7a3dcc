"""
Grid world dynamics and the exact Q oracle.

Run with: python tests/test_gridworld.py
"""

import sys
from pathlib import Path

import numpy as np
import pytest

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import (
    Action, GridConfig, InvalidObservationError, Observation, enumerate_observations, manhattan,
    new_episode, obs_index, observation_at, step, transition_table,
)
from gridworld.oracle import mean_optimal_length, optimal_q


def test_grid_config_invariants():
    assert GridConfig().n_observations == 600
    with pytest.raises(ValueError):
        GridConfig(size=1, max_steps=10)
    with pytest.raises(ValueError):
        GridConfig(size=5, max_steps=7)
    GridConfig(size=5, max_steps=8)


def test_new_episode_distinct_and_deterministic():
    grid = GridConfig(size=2, max_steps=2)
    rng = np.random.default_rng(0)
    for _ in range(200):
        obs = new_episode(grid, rng)
        assert obs.scout != obs.treasure

    a = new_episode(GridConfig(), np.random.default_rng(42))
    b = new_episode(GridConfig(), np.random.default_rng(42))
    assert a == b


def test_new_episode_uniform_over_observations():
    grid = GridConfig()
    rng = np.random.default_rng(7)
    n = 100_000
    counts = np.bincount([obs_index(new_episode(grid, rng), grid) for _ in range(n)],
                         minlength=grid.n_observations)
    assert counts.sum() == n and np.all(counts > 0)

    expected = n / grid.n_observations
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    dof = grid.n_observations - 1
    # mean dof, sd sqrt(2·dof)
    assert abs(chi2 - dof) < 5 * np.sqrt(2 * dof)
    sigma = np.sqrt(expected * (1 - 1 / grid.n_observations))
    assert np.all(np.abs(counts - expected) < 5 * sigma)


def test_step_examples():
    grid = GridConfig()
    out = step(Observation((2, 2), (2, 3)), Action.RIGHT, grid)
    assert out.next.scout == (2, 3) and out.terminal and out.reward == 0

    out = step(Observation((0, 0), (3, 3)), Action.UP, grid)
    assert out.next.scout == (0, 0) and not out.terminal and out.reward == -1

    out = step(Observation((4, 0), (0, 0)), Action.DOWN, grid)
    assert out.next.scout == (4, 0) and out.reward == -1


def test_dynamics_stay_on_grid():
    grid = GridConfig()
    for obs in enumerate_observations(grid):
        for a in Action:
            out = step(obs, a, grid)
            assert 0 <= out.next.scout[0] < grid.size and 0 <= out.next.scout[1] < grid.size
            assert out.next.treasure == obs.treasure
            assert out.terminal == (out.next.scout == out.next.treasure)
            assert out.reward == (0.0 if out.terminal else -1.0)


def test_observation_index_bijection():
    grid = GridConfig()
    seen = set()
    for k in range(grid.n_observations):
        obs = observation_at(k, grid)
        assert obs_index(obs, grid) == k
        seen.add(obs.as_tuple())
    assert len(seen) == 600
    # scout (0,0), treasure (0,1) is the first entry
    assert obs_index(Observation((0, 0), (0, 1)), grid) == 0
    with pytest.raises(InvalidObservationError):
        obs_index(Observation((1, 1), (1, 1)), grid)
    with pytest.raises(InvalidObservationError):
        obs_index(Observation((5, 0), (1, 1)), grid)


def test_transition_table_matches_step():
    grid = GridConfig(size=3, max_steps=4)
    table = transition_table(grid)
    for k, obs in enumerate(enumerate_observations(grid)):
        for a in Action:
            out = step(obs, a, grid)
            expected = -1 if out.terminal else obs_index(out.next, grid)
            assert table[k, a] == expected


def test_optimal_q_examples():
    grid = GridConfig()
    q = optimal_q(grid)
    obs = Observation((1, 1), (1, 2))
    assert q.value(obs, Action.RIGHT) == -1
    assert q.value(obs, Action.LEFT) == -3


def test_optimal_q_closed_form_everywhere():
    grid = GridConfig()
    q = optimal_q(grid)
    for k, obs in enumerate(enumerate_observations(grid)):
        assert q.row(k).max() == -manhattan(obs)
        for a in Action:
            out = step(obs, a, grid)
            expected = -1.0 if out.terminal else -1.0 - manhattan(out.next)
            assert q.q[k, a] == expected
    assert q.q.min() >= -(2 * (grid.size - 1) + 1) and q.q.max() <= 0
    assert q.bellman_residual() < 1e-12


def test_greedy_optimal_policy_takes_manhattan_steps():
    grid = GridConfig()
    q = optimal_q(grid)
    for obs in enumerate_observations(grid):
        cur, steps = obs, 0
        while True:
            out = step(cur, int(np.argmax(q.row(obs_index(cur, grid)))), grid)
            steps += 1
            if out.terminal:
                break
            cur = out.next
        assert steps == manhattan(obs)


def test_mean_optimal_length():
    assert mean_optimal_length(GridConfig(size=2, max_steps=2)) == pytest.approx(4 / 3)

    grid = GridConfig()
    cells = [(r, c) for r in range(5) for c in range(5)]
    total = sum(abs(a[0] - b[0]) + abs(a[1] - b[1]) for a in cells for b in cells if a != b)
    assert mean_optimal_length(grid) == pytest.approx(total / 600)

    for size in (2, 3, 6):
        value = mean_optimal_length(GridConfig(size=size, max_steps=2 * size))
        assert 1 <= value <= 2 * (size - 1)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
