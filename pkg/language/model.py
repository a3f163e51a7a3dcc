"""
Language = (generator, interpreter) over the grid world.

- Encoder: lookup table observation index -> semantic symbol in R².
- Decoder: 2 -> H -> 4 tanh perceptron, softmax over action logits.

Inference runs in numpy; training (language/training.py) mirrors the same
forward pass in torch.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import GridConfig, Observation, obs_index, InvalidObservationError

logger = logging.getLogger(__name__)

N_ACTIONS = 4
SYMBOL_DIM = 2


class UnknownObservationError(KeyError):
    """Observation has no entry in the encoder table."""
    pass


class NonFiniteSymbolError(ValueError):
    """Symbol with NaN/inf components handed to the interpreter."""
    pass


@dataclass(frozen=True, eq=False)
class Encoder:
    table: np.ndarray  # [n_observations, 2]

    def __post_init__(self):
        table = np.array(self.table, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] != SYMBOL_DIM:
            raise ValueError(f"Encoder table must be [N, 2], got {table.shape}")
        if not np.all(np.isfinite(table)):
            raise ValueError("Encoder table contains non-finite symbols")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def n_observations(self) -> int:
        return self.table.shape[0]


@dataclass(frozen=True, eq=False)
class Decoder:
    W1: np.ndarray  # [H, 2]
    b1: np.ndarray  # [H]
    W2: np.ndarray  # [4, H]
    b2: np.ndarray  # [4]
    temperature: float = 1.0

    def __post_init__(self):
        arrays = {}
        for name in ("W1", "b1", "W2", "b2"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"Decoder {name} contains non-finite weights")
            arr.setflags(write=False)
            arrays[name] = arr
        H = arrays["W1"].shape[0]
        expected = {"W1": (H, SYMBOL_DIM), "b1": (H,), "W2": (N_ACTIONS, H), "b2": (N_ACTIONS,)}
        for name, shape in expected.items():
            if arrays[name].shape != shape:
                raise ValueError(f"Decoder {name} has shape {arrays[name].shape}, expected {shape}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def hidden_units(self) -> int:
        return self.W1.shape[0]

    def logits(self, x: np.ndarray) -> np.ndarray:
        """Action logits for one symbol [2] or a batch [B, 2]."""
        h = np.tanh(x @ self.W1.T + self.b1)
        return h @ self.W2.T + self.b2

    def probs(self, x: np.ndarray) -> np.ndarray:
        z = self.logits(x) / self.temperature
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class Language:
    encoder: Encoder
    decoder: Decoder
    grid: GridConfig
    train_meta: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.encoder.n_observations != self.grid.n_observations:
            raise ValueError(
                f"Encoder has {self.encoder.n_observations} entries, grid {self.grid.size}x{self.grid.size} "
                f"needs {self.grid.n_observations}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Language):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.encoder.table, other.encoder.table)
            and all(np.array_equal(getattr(self.decoder, n), getattr(other.decoder, n))
                    for n in ("W1", "b1", "W2", "b2"))
            and self.decoder.temperature == other.decoder.temperature
            and self.train_meta == other.train_meta
        )

    __hash__ = object.__hash__

    @property
    def fingerprint(self) -> str:
        from language.storage import language_fingerprint
        return language_fingerprint(self)


def _check_symbol(symbol) -> np.ndarray:
    x = np.asarray(symbol, dtype=np.float64)
    if x.shape[-1:] != (SYMBOL_DIM,):
        raise ValueError(f"Symbol must have 2 components, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteSymbolError(f"Non-finite symbol: {symbol}")
    return x


def encode(lang: Language, obs: Observation) -> np.ndarray:
    """Semantic symbol of an observation (table lookup)."""
    try:
        idx = obs_index(obs, lang.grid)
    except InvalidObservationError as e:
        raise UnknownObservationError(f"No encoder entry for {obs}: {e}") from e
    return lang.encoder.table[idx].copy()


def encode_index(lang: Language, index: int) -> np.ndarray:
    if not 0 <= index < lang.encoder.n_observations:
        raise UnknownObservationError(f"No encoder entry for observation index {index}")
    return lang.encoder.table[index].copy()


def decode_probs(lang: Language, symbol) -> np.ndarray:
    """Interpretation distribution over the 4 actions: softmax(logits / temperature)."""
    return lang.decoder.probs(_check_symbol(symbol))


def sample_from(probs: np.ndarray, u) -> np.ndarray:
    """Inverse-CDF sampling; u uniform in [0, 1), one per row of probs."""
    cdf = np.cumsum(probs, axis=-1)
    u = np.asarray(u)
    idx = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def sample_action(lang: Language, symbol, rng: np.random.Generator) -> int:
    """Draw an action from decode_probs (one uniform draw from rng)."""
    probs = decode_probs(lang, symbol)
    return int(sample_from(probs, rng.random()))


def greedy_action(lang: Language, symbol) -> int:
    """Most probable action; lowest index on ties."""
    return int(np.argmax(decode_probs(lang, symbol)))


def init_language(grid: GridConfig, hidden_units: int, rng: np.random.Generator,
                  temperature: float = 1.0) -> Language:
    """
    Random initial parameters.

    Encoder symbols ~ N(0, I); decoder weights ~ N(0, 1/fan_in), zero biases.
    """
    table = rng.standard_normal((grid.n_observations, SYMBOL_DIM))
    W1 = rng.standard_normal((hidden_units, SYMBOL_DIM)) / np.sqrt(SYMBOL_DIM)
    W2 = rng.standard_normal((N_ACTIONS, hidden_units)) / np.sqrt(hidden_units)
    decoder = Decoder(W1=W1, b1=np.zeros(hidden_units), W2=W2, b2=np.zeros(N_ACTIONS),
                      temperature=temperature)
    return Language(encoder=Encoder(table), decoder=decoder, grid=grid)


def symbol_power(lang: Language) -> float:
    """Exact E‖x‖² under the uniform observation distribution."""
    return float(np.mean(np.sum(lang.encoder.table ** 2, axis=1)))
