"""
Scout-and-treasure grid world.

A scout and a treasure are placed on distinct cells of a square grid. Each
step the scout moves one cell (right, down, left, up), clamped at the
borders; the treasure never moves. The episode ends when the scout lands on
the treasure or the step cap is reached.

Coordinates are (row, col), row-major. Observations are indexed by a fixed
bijection onto [0, size²·(size²−1)) shared by every language and table.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Dict, List, Mapping, Tuple

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from utils.validators import validate_positive_int

Cell = Tuple[int, int]


class InvalidObservationError(ValueError):
    """Observation outside the grid or with scout and treasure on the same cell."""
    pass


class Action(IntEnum):
    RIGHT = 0
    DOWN = 1
    LEFT = 2
    UP = 3


ACTION_NAMES = ["right", "down", "left", "up"]

# (d_row, d_col) per action index
MOVES = np.array([[0, 1], [1, 0], [0, -1], [-1, 0]], dtype=np.int64)


@dataclass(frozen=True)
class GridConfig:
    size: int = 5
    max_steps: int = 50

    def __post_init__(self):
        validate_positive_int(self.size, "size")
        validate_positive_int(self.max_steps, "max_steps")
        if self.size < 2:
            raise ValueError(f"size must be >= 2 to place scout and treasure apart, got {self.size}")
        if self.max_steps < 2 * (self.size - 1):
            raise ValueError(
                f"max_steps={self.max_steps} is below the worst-case shortest path "
                f"{2 * (self.size - 1)} for size={self.size}"
            )

    @property
    def n_cells(self) -> int:
        return self.size * self.size

    @property
    def n_observations(self) -> int:
        return self.n_cells * (self.n_cells - 1)

    def to_dict(self) -> Dict:
        return {"size": self.size, "max_steps": self.max_steps}

    @classmethod
    def from_mapping(cls, data: Mapping) -> "GridConfig":
        return cls(size=int(data.get("size", 5)), max_steps=int(data.get("max_steps", 50)))


@dataclass(frozen=True)
class Observation:
    scout: Cell
    treasure: Cell

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.scout[0], self.scout[1], self.treasure[0], self.treasure[1])


@dataclass(frozen=True)
class StepOutcome:
    next: Observation
    reward: float
    terminal: bool


def _in_grid(cell: Cell, size: int) -> bool:
    return 0 <= cell[0] < size and 0 <= cell[1] < size


def check_observation(obs: Observation, config: GridConfig):
    """Raise InvalidObservationError unless obs is a valid episode state."""
    if not (_in_grid(obs.scout, config.size) and _in_grid(obs.treasure, config.size)):
        raise InvalidObservationError(f"Observation {obs} outside a {config.size}x{config.size} grid")
    if obs.scout == obs.treasure:
        raise InvalidObservationError(f"Scout and treasure share cell {obs.scout}")


def obs_index(obs: Observation, config: GridConfig) -> int:
    """
    Index of a valid observation.

    Scout cell s (row-major) major, treasure cell t minor with the scout cell
    skipped: index = s·(n−1) + (t if t < s else t−1), n = size².
    """
    check_observation(obs, config)
    s = obs.scout[0] * config.size + obs.scout[1]
    t = obs.treasure[0] * config.size + obs.treasure[1]
    return s * (config.n_cells - 1) + (t if t < s else t - 1)


def observation_at(index: int, config: GridConfig) -> Observation:
    """Inverse of obs_index."""
    if not 0 <= index < config.n_observations:
        raise InvalidObservationError(f"Observation index {index} out of range")
    s, r = divmod(int(index), config.n_cells - 1)
    t = r if r < s else r + 1
    return Observation(scout=divmod(s, config.size), treasure=divmod(t, config.size))


@lru_cache(maxsize=16)
def enumerate_observations(config: GridConfig) -> Tuple[Observation, ...]:
    """All valid observations in index order."""
    return tuple(observation_at(i, config) for i in range(config.n_observations))


def new_episode(config: GridConfig, rng: np.random.Generator) -> Observation:
    """
    Sample a start observation uniformly over distinct scout/treasure cells.

    Distinctness is enforced by rejection, so the result is a deterministic
    function of the rng state.
    """
    n = config.n_cells
    scout = int(rng.integers(n))
    treasure = int(rng.integers(n))
    while treasure == scout:
        treasure = int(rng.integers(n))
    return Observation(scout=divmod(scout, config.size), treasure=divmod(treasure, config.size))


def step(obs: Observation, action: int, config: GridConfig) -> StepOutcome:
    """
    Move the scout one cell, clamped at the borders.

    Returns:
        StepOutcome with reward 0 on capture, -1 otherwise
    """
    d_row, d_col = MOVES[int(Action(action))]
    row = min(max(obs.scout[0] + int(d_row), 0), config.size - 1)
    col = min(max(obs.scout[1] + int(d_col), 0), config.size - 1)
    nxt = Observation(scout=(row, col), treasure=obs.treasure)
    terminal = nxt.scout == nxt.treasure
    return StepOutcome(next=nxt, reward=0.0 if terminal else -1.0, terminal=terminal)


@lru_cache(maxsize=16)
def transition_table(config: GridConfig) -> np.ndarray:
    """
    Next-observation index for every (observation, action).

    Returns:
        int array [n_observations, 4]; -1 marks a capturing move
    """
    table = np.empty((config.n_observations, len(Action)), dtype=np.int64)
    for i, obs in enumerate(enumerate_observations(config)):
        for a in Action:
            outcome = step(obs, a, config)
            table[i, a] = -1 if outcome.terminal else obs_index(outcome.next, config)
    table.setflags(write=False)
    return table


def manhattan(obs: Observation) -> int:
    return abs(obs.scout[0] - obs.treasure[0]) + abs(obs.scout[1] - obs.treasure[1])


def observation_rows(config: GridConfig) -> List[List[int]]:
    """Index order as [scout_row, scout_col, treasure_row, treasure_col] rows (artifact form)."""
    return [list(o.as_tuple()) for o in enumerate_observations(config)]
