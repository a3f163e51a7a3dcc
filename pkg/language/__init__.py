# language/__init__.py - Learned encoder/decoder pairs
"""
Modules:
- model: encoder table, softmax interpreter, decoding
- training: REINFORCE over the noisy channel
- storage: JSON language artifact
"""

from .model import (
    Encoder, Decoder, Language, UnknownObservationError, NonFiniteSymbolError,
    encode, encode_index, decode_probs, sample_action, greedy_action, init_language, symbol_power,
)
from .training import TrainConfig, TrainingDivergedError, train_language, greedy_mean_length, greedy_rollouts
from .storage import save_language, load_language, language_fingerprint

__all__ = [
    "Encoder",
    "Decoder",
    "Language",
    "UnknownObservationError",
    "NonFiniteSymbolError",
    "encode",
    "encode_index",
    "decode_probs",
    "sample_action",
    "greedy_action",
    "init_language",
    "symbol_power",
    "TrainConfig",
    "TrainingDivergedError",
    "train_language",
    "greedy_mean_length",
    "greedy_rollouts",
    "save_language",
    "load_language",
    "language_fingerprint",
]
