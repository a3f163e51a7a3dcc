"""
SNR sweep: strategies × decoder modes × SNRs × seeds -> results CSV, plus
a cross-seed summary CSV next to it.
"""

import csv
import math
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from codebook.linear_ot import DEFAULT_REG
from harness.artifacts import Artifacts
from harness.episodes import DECODER_MODES, STRATEGIES, EvalResult, StrategySpec, evaluate
from semantics.partition import DEFAULT_SAMPLES
from utils.validators import (
    validate_output_path, validate_positive_float, validate_positive_int, validate_snr_list,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["strategy", "decoder_mode", "snr_db", "seed", "episodes", "mean_length",
                  "std_length", "success_rate", "mean_post_T_power"]
SUMMARY_COLUMNS = ["strategy", "decoder_mode", "snr_db", "seeds", "mean_length", "sd_length",
                   "ci95", "mean_success_rate"]


@dataclass(frozen=True)
class SweepConfig:
    snr_list: Tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    episodes: int = 1000
    seeds: Tuple[int, ...] = tuple(range(10))
    samples: int = DEFAULT_SAMPLES
    reg: float = DEFAULT_REG
    strategies: Tuple[str, ...] = STRATEGIES
    decoder_modes: Tuple[str, ...] = ("stochastic",)

    def __post_init__(self):
        object.__setattr__(self, "snr_list", tuple(validate_snr_list(list(self.snr_list))))
        validate_positive_int(self.episodes, "episodes")
        validate_positive_int(self.samples, "samples")
        validate_positive_float(self.reg, "reg", allow_zero=True)
        if not self.seeds:
            raise ValueError("seeds cannot be empty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for s in self.strategies:
            StrategySpec(s)
        for m in self.decoder_modes:
            if m not in DECODER_MODES:
                raise ValueError(f"Unknown decoder mode {m!r}")
        if not self.strategies or not self.decoder_modes:
            raise ValueError("strategies and decoder_modes cannot be empty")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SweepConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data and data[k] is not None}
        if isinstance(known.get("snr_list"), str):
            known["snr_list"] = validate_snr_list(known["snr_list"])
        if isinstance(known.get("seeds"), str):
            known["seeds"] = [int(s) for s in known["seeds"].split(",") if s.strip()]
        for k in ("snr_list", "seeds", "strategies", "decoder_modes"):
            if k in known:
                known[k] = tuple(known[k])
        return cls(**known)


def _fmt(value) -> str:
    """Shortest round-trip text for floats; 'inf' for a noiseless SNR."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: List[str], rows: Iterable[Mapping]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def summarize(rows: Iterable[Mapping]) -> List[Dict]:
    """
    Aggregate result rows over seeds.

    Returns:
        One dict per (strategy, decoder_mode, snr_db) in first-seen order, with
        mean and sd of mean_length across seeds and ci95 = 1.96·sd/√n
    """
    groups: Dict[Tuple, List[Mapping]] = {}
    for row in rows:
        groups.setdefault((row["strategy"], row["decoder_mode"], float(row["snr_db"])), []).append(row)

    out = []
    for (strategy, mode, snr), members in groups.items():
        lengths = np.array([float(r["mean_length"]) for r in members])
        n = len(lengths)
        sd = float(lengths.std(ddof=1)) if n > 1 else 0.0
        out.append({
            "strategy": strategy,
            "decoder_mode": mode,
            "snr_db": snr,
            "seeds": n,
            "mean_length": float(lengths.mean()),
            "sd_length": sd,
            "ci95": 1.96 * sd / math.sqrt(n),
            "mean_success_rate": float(np.mean([float(r["success_rate"]) for r in members])),
        })
    return out


def summary_path(out_path: Union[str, Path]) -> Path:
    p = Path(out_path)
    return p.with_name(f"{p.stem}_summary.csv")


def sweep(cfg: SweepConfig, art: Artifacts, out_path: Union[str, Path]) -> Path:
    """
    Evaluate the full cross product and write the results CSV.

    Row order: strategy, decoder mode, SNR, seed (as listed in cfg). Reruns
    with the same inputs produce byte-identical files.

    Raises:
        ValueError: If out_path cannot be written
        ProvenanceError: If the artifacts do not form one chain
    """
    p = validate_output_path(out_path)
    art.verify()

    total = len(cfg.strategies) * len(cfg.decoder_modes) * len(cfg.snr_list) * len(cfg.seeds)
    logger.info(f"Sweep: {total} points × {cfg.episodes} episodes")

    results: List[EvalResult] = []
    for strategy in cfg.strategies:
        for mode in cfg.decoder_modes:
            spec = StrategySpec(strategy, mode)
            for snr in cfg.snr_list:
                for seed in cfg.seeds:
                    results.append(evaluate(spec, art, snr, cfg.episodes, seed))

    rows = [r.to_row() for r in results]
    _write_csv(p, RESULT_COLUMNS, rows)
    _write_csv(summary_path(p), SUMMARY_COLUMNS, summarize(rows))
    logger.info(f"✅ Wrote {len(rows)} rows to {p}")
    return p


def read_results(path: Union[str, Path]) -> List[Dict]:
    """Rows of a results CSV as dicts of strings."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
