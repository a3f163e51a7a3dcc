"""
Layered configuration for the CLI.

Precedence: explicit CLI flag > user config file (--config) > defaults file
(config/defaults.yaml, or $SEMEQ_CONFIG). Files are YAML; JSON is read
through the YAML loader.
"""

import os
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

BASE = Path(__file__).resolve().parent
DEFAULTS_PATH = BASE / "config" / "defaults.yaml"

COMMANDS = ("train", "codebook", "eval", "sweep", "raster")

# recognised keys per subcommand (CLI flags, dashes as underscores)
COMMAND_KEYS = {
    "train": frozenset([
        "seed", "grid_size", "max_steps", "episodes", "learning_rate", "entropy_bonus", "snr",
        "baseline", "hidden_units", "batch_size", "temperature", "log_every", "discount",
        "normalize_advantages", "final_lr_fraction", "out",
    ]),
    "codebook": frozenset(["seed", "source", "target", "samples", "reg", "exhaustive", "out"]),
    "eval": frozenset([
        "seed", "source", "target", "artifacts", "strategy", "policy", "decoder", "snr",
        "episodes", "trace", "out",
    ]),
    "sweep": frozenset([
        "seed", "source", "target", "artifacts", "samples", "reg", "snr_list", "episodes",
        "n_seeds", "seeds", "strategies", "decoder", "out",
    ]),
    "raster": frozenset(["seed", "language", "bounds", "resolution", "out"]),
}

# TrainConfig / SweepConfig field names accepted in config files
ALIASES = {
    "train": {"train_snr_db": "snr"},
    "sweep": {"decoder_modes": "decoder"},
}

logger = logging.getLogger(__name__)


def defaults_path() -> Path:
    return Path(os.getenv("SEMEQ_CONFIG", str(DEFAULTS_PATH)))


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a YAML/JSON mapping.

    Raises:
        ValueError: If the file is missing, unparsable or not a mapping
    """
    p = Path(path)
    try:
        with open(p, "r", encoding="utf-8") as f:
            doc = yaml.safe_load(f)
    except OSError as e:
        raise ValueError(f"Cannot read config file {p}: {e}")
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid config file {p}: {str(e).splitlines()[0]}")
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"Config file {p} must hold a mapping, got {type(doc).__name__}")
    return doc


def _normalize(key: str) -> str:
    return str(key).replace("-", "_")


def _canonical(key: str, command: str) -> str:
    return ALIASES.get(command, {}).get(key, key)


def _known_anywhere(key: str) -> bool:
    return any(_canonical(key, c) in COMMAND_KEYS[c] for c in COMMANDS)


def _put(out: Dict[str, Any], origin: Dict[str, str], key: str, raw: str, value: Any, where: str):
    if key in origin and origin[key] != raw:
        raise ValueError(f"Config {where} sets both '{origin[key]}' and '{raw}'")
    origin[key] = raw
    out[key] = value


def section(doc: Mapping[str, Any], command: str) -> Dict[str, Any]:
    """
    Flat top-level keys, overridden by the command's own section.

    Field names of the typed configs (train_snr_db, decoder_modes) are read as
    their flag names. Raises ValueError on keys no subcommand recognises.
    """
    flat: Dict[str, Any] = {}
    origin: Dict[str, str] = {}
    for k, v in doc.items():
        if k in COMMANDS:
            continue
        raw = _normalize(k)
        key = _canonical(raw, command)
        if key in COMMAND_KEYS[command]:
            _put(flat, origin, key, raw, v, "top level")
        elif not _known_anywhere(raw):
            raise ValueError(f"Unknown config key '{k}'")

    own = doc.get(command) or {}
    if not isinstance(own, dict):
        raise ValueError(f"Config section '{command}' must be a mapping")
    scoped: Dict[str, Any] = {}
    origin = {}
    for k, v in own.items():
        raw = _normalize(k)
        key = _canonical(raw, command)
        if key not in COMMAND_KEYS[command]:
            raise ValueError(f"Unknown key '{k}' in config section '{command}'")
        _put(scoped, origin, key, raw, v, f"section '{command}'")
    flat.update(scoped)
    return flat


def resolve_settings(command: str, cli: Mapping[str, Any],
                     config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """
    Merge defaults, user config and CLI values for one subcommand.

    Args:
        command: Subcommand name
        cli: Parsed flags; None means "not given"
        config_path: Optional user config file

    Returns:
        Flat dict keyed by flag name (underscored)
    """
    if command not in COMMANDS:
        raise ValueError(f"Unknown command {command!r}")

    merged = section(load_config_file(defaults_path()), command)
    if config_path:
        user = section(load_config_file(config_path), command)
        logger.debug(f"Config {config_path} sets {sorted(user)}")
        merged.update(user)
    merged.update({_normalize(k): v for k, v in cli.items() if v is not None})
    return merged


def env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "on")


def log_level(cli_level: Optional[str] = None) -> str:
    level = (cli_level or os.getenv("SEMEQ_LOG_LEVEL") or "INFO").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ValueError(f"Unknown log level {level!r}")
    return level
