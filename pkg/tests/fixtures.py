"""
Hand-built languages and clouds shared by the tests.

Quadrant decoder: H=2, W1=I, W2 rows (+x₁, +x₂, −x₁, −x₂), so atom i is the
region where the i-th of (x₁, x₂, −x₁, −x₂) is largest.

Oracle language: quadrant decoder, and every observation encoded at
2·u(a*) where a* is the lowest-index optimal action and u = (right (1,0),
down (0,1), left (−1,0), up (0,−1)). Greedy decoding is optimal.

Rotated language: same construction with every direction rotated by 90°,
so it solves the task equally well while disagreeing with the oracle
language on every atom.
"""

import sys
import os
from pathlib import Path

import numpy as np
import pytest

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import GridConfig
from gridworld.oracle import optimal_q
from language.model import Decoder, Encoder, Language

SLOW = pytest.mark.skipif(os.getenv("SEMEQ_SLOW_TESTS", "") not in ("1", "true", "yes"),
                          reason="set SEMEQ_SLOW_TESTS=1 to run training experiments")

QUADRANT_W2 = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])  # +90°


def quadrant_decoder(rotation: np.ndarray = np.eye(2), temperature: float = 1.0) -> Decoder:
    return Decoder(W1=np.eye(2), b1=np.zeros(2), W2=QUADRANT_W2 @ rotation.T, b2=np.zeros(4),
                   temperature=temperature)


def uniform_decoder() -> Decoder:
    return Decoder(W1=np.zeros((2, 2)), b1=np.zeros(2), W2=np.zeros((4, 2)), b2=np.zeros(4))


def constant_language(grid: GridConfig = GridConfig(), symbol=(0.0, 0.0), decoder: Decoder = None) -> Language:
    table = np.tile(np.asarray(symbol, dtype=np.float64), (grid.n_observations, 1))
    return Language(encoder=Encoder(table), decoder=decoder or quadrant_decoder(), grid=grid)


def oracle_actions(grid: GridConfig) -> np.ndarray:
    return np.argmax(optimal_q(grid).q, axis=1)


def oracle_language(grid: GridConfig = GridConfig(), rotation: np.ndarray = np.eye(2),
                    scale: float = 2.0) -> Language:
    table = scale * DIRECTIONS[oracle_actions(grid)] @ rotation.T
    return Language(encoder=Encoder(table), decoder=quadrant_decoder(rotation), grid=grid)


def rotated_language(grid: GridConfig = GridConfig()) -> Language:
    return oracle_language(grid, rotation=ROTATION)
