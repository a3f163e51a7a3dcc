"""
Exact action-values for the obstacle-free grid.

Value iteration with a cost of 1 per move (the capturing move included),
discount 1 and absorbing capture, so q(a, o) is minus the number of moves
to the treasure when taking a first and acting optimally afterwards.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import GridConfig, Observation, obs_index, transition_table, enumerate_observations, manhattan

logger = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-12


@dataclass(frozen=True)
class QTable:
    grid: GridConfig
    q: np.ndarray  # [n_observations, 4]
    iterations: int = 0

    def row(self, index: int) -> np.ndarray:
        return self.q[index]

    def value(self, obs: Observation, action: int) -> float:
        return float(self.q[obs_index(obs, self.grid), int(action)])

    def bellman_residual(self) -> float:
        """Largest |q − (−1 + max_a' q(next))| over all entries."""
        return float(np.max(np.abs(self.q - _backup(self.q.max(axis=1), transition_table(self.grid)))))


def _backup(v: np.ndarray, table: np.ndarray) -> np.ndarray:
    v_next = np.where(table >= 0, v[np.maximum(table, 0)], 0.0)
    return -1.0 + v_next


@lru_cache(maxsize=16)
def optimal_q(config: GridConfig) -> QTable:
    """
    Solve for q by value iteration until the sup-norm change drops below 1e-12.

    Returns:
        QTable (read-only array)
    """
    table = transition_table(config)
    v = np.zeros(config.n_observations)
    iterations = 0
    # shortest paths are bounded by the number of observations
    for iterations in range(1, config.n_observations + 2):
        q = _backup(v, table)
        v_new = q.max(axis=1)
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if delta < CONVERGENCE_TOL:
            break
    else:
        logger.warning(f"Value iteration hit the iteration cap (delta={delta:.3e})")

    q = _backup(v, table)
    q.setflags(write=False)
    logger.debug(f"Value iteration converged in {iterations} sweeps for size={config.size}")
    return QTable(grid=config, q=q, iterations=iterations)


def mean_optimal_length(config: GridConfig) -> float:
    """
    Expected shortest-path length between uniformly chosen distinct scout/treasure cells.

    Exact, by enumeration.
    """
    distances = [manhattan(o) for o in enumerate_observations(config)]
    return float(sum(distances)) / len(distances)
