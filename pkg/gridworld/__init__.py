# gridworld/__init__.py - Scout-and-treasure task
"""
Modules:
- env: grid dynamics, observation indexing
- oracle: exact Q-values and the optimal episode-length yardstick
"""

from .env import (
    Action, GridConfig, Observation, StepOutcome, InvalidObservationError,
    new_episode, step, obs_index, observation_at, enumerate_observations, transition_table,
)
from .oracle import QTable, optimal_q, mean_optimal_length

__all__ = [
    "Action",
    "GridConfig",
    "Observation",
    "StepOutcome",
    "InvalidObservationError",
    "new_episode",
    "step",
    "obs_index",
    "observation_at",
    "enumerate_observations",
    "transition_table",
    "QTable",
    "optimal_q",
    "mean_optimal_length",
]
