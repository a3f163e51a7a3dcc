# utils/validators.py - Parameter validation
"""
Validators for numeric parameters coming from configs, flags and artifact files.
Every helper returns the normalized value or raises ValueError naming it.
"""

import math
from pathlib import Path
from typing import Sequence, Union


NOISELESS_TOKENS = frozenset(["noiseless", "inf", "+inf", "infinity"])


def validate_positive_int(value, name: str) -> int:
    """
    Validate a strictly positive integer.

    Args:
        value: Value to check (bools are rejected)
        name: Parameter name used in the error message

    Returns:
        The value as int

    Raises:
        ValueError: If value is not an integer >= 1
    """
    if isinstance(value, bool) or not (isinstance(value, int) or _is_integral_float(value)):
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    value = int(value)
    if value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return value


def validate_positive_float(value, name: str, allow_zero: bool = False) -> float:
    """
    Validate a finite positive (or nonnegative) real.

    Args:
        value: Value to check
        name: Parameter name used in the error message
        allow_zero: Accept 0.0

    Returns:
        The value as float

    Raises:
        ValueError: If value is not finite or out of range
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a real number, got {value!r}")

    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value


def validate_snr_db(value: Union[str, float, int]) -> float:
    """
    Validate an SNR in dB.

    Accepts reals and the noiseless tokens ("noiseless", "inf").

    Returns:
        SNR in dB; +inf for a noiseless channel

    Raises:
        ValueError: If the value is NaN, -inf or unparseable
    """
    if isinstance(value, str):
        token = value.strip().lower()
        if token in NOISELESS_TOKENS:
            return math.inf
        try:
            value = float(token)
        except ValueError:
            raise ValueError(f"Invalid SNR: {value!r}. Use a number in dB or 'noiseless'.")

    value = float(value)
    if math.isnan(value) or value == -math.inf:
        raise ValueError(f"Invalid SNR: {value}")
    return value


def validate_snr_list(values: Union[str, Sequence]) -> list:
    """
    Validate a list of SNRs; a comma-separated string is split first.

    Raises:
        ValueError: If the list is empty or an entry is invalid
    """
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    snrs = [validate_snr_db(v) for v in values]
    if not snrs:
        raise ValueError("SNR list cannot be empty")
    return snrs


def validate_bounds(bounds: Sequence[float]) -> tuple:
    """
    Validate a 2-D box (xmin, xmax, ymin, ymax).

    Raises:
        ValueError: If the box is degenerate or not finite
    """
    if len(bounds) != 4:
        raise ValueError(f"Bounds need 4 values (xmin, xmax, ymin, ymax), got {len(bounds)}")
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if not all(math.isfinite(b) for b in (xmin, xmax, ymin, ymax)):
        raise ValueError(f"Bounds must be finite: {bounds}")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"Degenerate bounds: {bounds}")
    return xmin, xmax, ymin, ymax


def validate_output_path(path: Union[str, Path]) -> Path:
    """
    Validate that a file can be written at path (parent directory created).

    Raises:
        ValueError: If the path is empty, a directory, or its parent cannot be created
    """
    if not path:
        raise ValueError("Output path cannot be empty")

    p = Path(path)
    if p.is_dir():
        raise ValueError(f"Output path is a directory: {path}")

    try:
        p.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ValueError(f"Cannot write to {path}: {e}")

    return p


def _is_integral_float(value) -> bool:
    return isinstance(value, float) and math.isfinite(value) and value.is_integer()
