"""
AWGN channel calibration and noise statistics.

Run with: python tests/test_channel.py
"""

import sys
import math
from pathlib import Path

import numpy as np
import pytest

BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from channel import ChannelConfig, calibrate_sigma, transmit


def test_calibrate_sigma_examples():
    assert calibrate_sigma(2.0, 0.0) == pytest.approx(1.0)
    assert calibrate_sigma(8.0, 6.0206) == pytest.approx(1.0, abs=1e-4)
    assert calibrate_sigma(1.0, math.inf) == 0.0
    assert calibrate_sigma(1.0, "noiseless") == 0.0


def test_calibrate_sigma_monotone():
    snrs = np.linspace(-20, 30, 26)
    sigmas = [calibrate_sigma(3.0, s) for s in snrs]
    assert all(a > b for a, b in zip(sigmas, sigmas[1:]))


def test_calibrate_sigma_rejects_bad_power():
    for power in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            calibrate_sigma(power, 10.0)
    with pytest.raises(ValueError):
        calibrate_sigma(1.0, float("nan"))


def test_calibrate_sigma_extreme_snr():
    # far beyond the float range of 10^(snr/10)
    assert calibrate_sigma(2.0, 4000.0) == pytest.approx(1e-200, rel=1e-9)
    assert calibrate_sigma(2.0, 7000.0) == 0.0
    assert calibrate_sigma(2.0, -4000.0) == pytest.approx(1e200, rel=1e-9)
    with pytest.raises(ValueError):
        calibrate_sigma(1.0, -7000.0)

    assert ChannelConfig.from_snr(4000.0, 2.0).sigma > 0
    assert ChannelConfig.from_snr(7000.0, 2.0).noiseless
    with pytest.raises(ValueError):
        ChannelConfig.from_snr(-7000.0, 2.0)


def test_channel_config():
    cfg = ChannelConfig.from_snr(0.0, 2.0)
    assert cfg.sigma == pytest.approx(1.0) and not cfg.noiseless
    assert ChannelConfig.from_snr("noiseless", 2.0).noiseless
    with pytest.raises(ValueError):
        ChannelConfig(snr_db=10.0, sigma=0.0)
    with pytest.raises(ValueError):
        ChannelConfig(snr_db=math.inf, sigma=0.5)


def test_noiseless_transmit_is_identity():
    cfg = ChannelConfig.noiseless_channel()
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    x = np.array([0.3, -1.7])
    y = transmit(x, cfg, rng)
    assert np.array_equal(x, y) and y is not x
    assert rng.bit_generator.state == state


def test_transmit_rejects_non_finite():
    with pytest.raises(ValueError):
        transmit([np.nan, 0.0], ChannelConfig.from_snr(10.0, 1.0), np.random.default_rng(0))


def test_noise_moments():
    rng = np.random.default_rng(123)
    cfg = ChannelConfig(snr_db=0.0, sigma=1.0)
    n = 1_000_000
    noise = transmit(np.zeros((n, 2)), cfg, rng)
    assert np.all(np.abs(noise.mean(axis=0)) < 0.004)
    var = noise.var(axis=0)
    assert np.all((var > 0.995) & (var < 1.005))
    # 4 sd of the sample covariance
    assert abs(np.mean(noise[:, 0] * noise[:, 1])) < 0.004


def test_empirical_snr_matches_target():
    rng = np.random.default_rng(9)
    symbols = rng.standard_normal((1_000_000, 2)) * np.array([2.0, 0.5]) + np.array([1.0, -1.0])
    power = float(np.mean(np.sum(symbols ** 2, axis=1)))
    for snr in (-10.0, 0.0, 10.0, 20.0):
        cfg = ChannelConfig.from_snr(snr, power)
        noise = transmit(symbols, cfg, rng) - symbols
        empirical = 10 * np.log10(power / np.mean(np.sum(noise ** 2, axis=1)))
        assert abs(empirical - snr) < 0.1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
