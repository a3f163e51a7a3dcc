"""
AWGN channel between language generator and interpreter.

SNR is total symbol power over total noise power: for a 2-D real symbol
with per-component noise std σ the noise power is 2σ², so
σ = sqrt(P / (2 · 10^(snr_db/10))) where P = E‖x‖² under the transmitting
language and the observation distribution.
"""

import math
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parent
sys.path.insert(0, str(BASE))

from utils.validators import validate_snr_db

logger = logging.getLogger(__name__)


def calibrate_sigma(avg_power: float, snr_db: float) -> float:
    """
    Per-component noise std for a target SNR.

    Args:
        avg_power: E‖x‖² of the transmitted symbols (> 0)
        snr_db: SNR in dB; +inf means noiseless

    Returns:
        sigma >= 0; 0 when the SNR is so high that the noise underflows

    Raises:
        ValueError: If avg_power is not a positive finite number, or the SNR is
            so low that sigma overflows
    """
    avg_power = float(avg_power)
    if not math.isfinite(avg_power) or avg_power <= 0:
        raise ValueError(f"avg_power must be positive, got {avg_power}")

    snr_db = validate_snr_db(snr_db)
    if snr_db == math.inf:
        return 0.0

    # sqrt(P / 2) · 10^(-snr/20); 10^(snr/10) on its own overflows near 3100 dB
    try:
        sigma = math.sqrt(avg_power / 2.0) * math.pow(10.0, -snr_db / 20.0)
    except OverflowError:
        raise ValueError(f"Noise for snr_db={snr_db} is not representable")
    if not math.isfinite(sigma):
        raise ValueError(
            f"Noise for snr_db={snr_db} and avg_power={avg_power} is not representable")
    return sigma


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if (self.sigma == 0) != self.noiseless:
            raise ValueError(f"sigma={self.sigma} inconsistent with snr_db={self.snr_db}")

    @property
    def noiseless(self) -> bool:
        return self.snr_db == math.inf

    @classmethod
    def from_snr(cls, snr_db: Union[str, float], avg_power: float) -> "ChannelConfig":
        snr = validate_snr_db(snr_db)
        sigma = calibrate_sigma(avg_power, snr)
        if sigma == 0 and snr != math.inf:
            logger.warning(f"Noise at {snr:g} dB underflows to zero; using a noiseless channel")
            return cls.noiseless_channel()
        return cls(snr_db=snr, sigma=sigma)

    @classmethod
    def noiseless_channel(cls) -> "ChannelConfig":
        return cls(snr_db=math.inf, sigma=0.0)


def transmit(symbol, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Add i.i.d. N(0, σ²) noise to every component.

    Works on a single 2-vector or a batch [..., 2]. With σ = 0 the input is
    returned unchanged and the rng is not consumed.
    """
    symbol = np.asarray(symbol, dtype=np.float64)
    if not np.all(np.isfinite(symbol)):
        raise ValueError(f"Cannot transmit a non-finite symbol: {symbol}")
    if cfg.sigma == 0:
        return symbol.copy()
    return symbol + cfg.sigma * rng.standard_normal(symbol.shape)
