#!/usr/bin/env python3
"""
Semantic channel equalization experiments.

Usage:
    python cli.py train --seed 1 --out lang_s.json
    python cli.py train --seed 2 --out lang_t.json
    python cli.py codebook --seed 0 --source lang_s.json --target lang_t.json --out artifacts
    python cli.py eval --seed 0 --source lang_s.json --target lang_t.json --artifacts artifacts --policy eff --snr 10
    python cli.py sweep --seed 0 --source lang_s.json --target lang_t.json --artifacts artifacts --out results.csv
    python cli.py raster --language lang_s.json --out partition_s.pgm

Every subcommand prints a JSON summary on stdout; logs go to stderr.
Defaults live in config/defaults.yaml; --config overrides them, flags
override both.
"""

import sys
import json
import logging
import argparse
import traceback
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

BASE = Path(__file__).resolve().parent
sys.path.insert(0, str(BASE))

from dotenv import load_dotenv

from gridworld.env import GridConfig
from harness.artifacts import build_artifacts, load_artifacts, save_artifacts
from harness.episodes import DECODER_MODES, STRATEGIES, StrategySpec, evaluate
from harness.raster import partition_raster, points_path
from harness.sweep import SweepConfig, summary_path, sweep
from language.storage import load_language, save_language
from language.training import TrainConfig, train_language
from settings import env_flag, log_level, resolve_settings
from utils.fingerprint import write_json
from utils.validators import validate_bounds, validate_positive_int, validate_snr_db

logger = logging.getLogger("semeq")

POLICY_STRATEGY = {"none": "cross_no_eq", "sem": "cross_sem", "eff": "cross_eff"}


def _split(value) -> List[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _require(settings: Dict[str, Any], *keys: str):
    missing = [k for k in keys if settings.get(k) in (None, "")]
    if missing:
        raise ValueError(f"Missing required setting(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")


def cmd_train(s: Dict[str, Any]) -> Dict:
    grid = GridConfig(size=validate_positive_int(s["grid_size"], "grid_size"),
                      max_steps=validate_positive_int(s["max_steps"], "max_steps"))
    tc = TrainConfig.from_mapping({**s, "train_snr_db": s["snr"]})
    lang = train_language(grid, tc, int(s["seed"]))
    path = save_language(lang, s["out"])
    return {
        "language": str(path),
        "fingerprint": lang.fingerprint,
        "greedy_mean_length": lang.train_meta["greedy_mean_length"],
        "mean_optimal_length": lang.train_meta["mean_optimal_length"],
        "length_ratio": lang.train_meta["length_ratio"],
        "greedy_success_rate": lang.train_meta["greedy_success_rate"],
    }


def cmd_codebook(s: Dict[str, Any]) -> Dict:
    _require(s, "source", "target")
    art = build_artifacts(load_language(s["source"]), load_language(s["target"]), int(s["seed"]),
                          samples=s["samples"], reg=float(s["reg"]), exhaustive=bool(s["exhaustive"]))
    paths = save_artifacts(art, s["out"])
    return {
        "maps": len(art.codebook),
        "diagnostics": len(art.codebook.diagnostics["records"]),
        "source_atom_counts": art.source_cloud.counts.tolist(),
        "target_atom_counts": art.target_cloud.counts.tolist(),
        "files": {k: str(v) for k, v in paths.items()},
    }


def cmd_eval(s: Dict[str, Any]) -> Dict:
    _require(s, "source", "target", "artifacts")
    strategy = POLICY_STRATEGY[s["policy"]] if s.get("policy") else s["strategy"]
    spec = StrategySpec(strategy, s["decoder"])
    art = load_artifacts(s["source"], s["target"], s["artifacts"])
    result = evaluate(spec, art, validate_snr_db(s["snr"]), s["episodes"], int(s["seed"]),
                      trace_path=s.get("trace"))
    row = result.to_row()
    row["snr_db"] = repr(row["snr_db"])
    if s.get("out"):
        write_json(s["out"], row)
    return row


def cmd_sweep(s: Dict[str, Any]) -> Dict:
    _require(s, "source", "target")
    seed = int(s["seed"])
    seeds = [int(x) for x in _split(s["seeds"])] if s.get("seeds") else \
        list(range(seed, seed + validate_positive_int(s["n_seeds"], "n_seeds")))
    cfg = SweepConfig.from_mapping({
        "snr_list": s["snr_list"],
        "episodes": s["episodes"],
        "seeds": seeds,
        "samples": s["samples"],
        "reg": float(s["reg"]),
        "strategies": _split(s["strategies"]),
        "decoder_modes": _split(s["decoder"]),
    })
    if s.get("artifacts"):
        art = load_artifacts(s["source"], s["target"], s["artifacts"])
    else:
        art = build_artifacts(load_language(s["source"]), load_language(s["target"]), seed,
                              samples=cfg.samples, reg=cfg.reg)
    path = sweep(cfg, art, s["out"])
    return {"results": str(path), "summary": str(summary_path(path)),
            "rows": len(cfg.strategies) * len(cfg.decoder_modes) * len(cfg.snr_list) * len(cfg.seeds)}


def cmd_raster(s: Dict[str, Any]) -> Dict:
    _require(s, "language")
    bounds = validate_bounds([float(b) for b in _split(s["bounds"])]) if s.get("bounds") else None
    path = partition_raster(load_language(s["language"]), s["out"], bounds=bounds,
                            resolution=s["resolution"])
    return {"raster": str(path), "points": str(points_path(path))}


HANDLERS: Dict[str, Callable[[Dict[str, Any]], Dict]] = {
    "train": cmd_train,
    "codebook": cmd_codebook,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "raster": cmd_raster,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Semantic channel equalization between learned languages")
    parser.add_argument("--config", help="YAML/JSON config file (flat keys or per-command sections)")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR (default: $SEMEQ_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Commands")

    train = subparsers.add_parser("train", help="Train one language")
    train.add_argument("--seed", type=int, required=True)
    train.add_argument("--grid-size", type=int)
    train.add_argument("--max-steps", type=int)
    train.add_argument("--episodes", type=int)
    train.add_argument("--learning-rate", type=float)
    train.add_argument("--entropy-bonus", type=float)
    train.add_argument("--snr", help="Training SNR in dB (or 'noiseless')")
    train.add_argument("--baseline", type=float, help="Baseline moving-average decay")
    train.add_argument("--hidden-units", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--discount", type=float, help="Return discount in (0, 1]")
    train.add_argument("--normalize-advantages", action=argparse.BooleanOptionalAction, default=None)
    train.add_argument("--final-lr-fraction", type=float,
                       help="Final learning rate as a fraction of the initial one")
    train.add_argument("--temperature", type=float)
    train.add_argument("--log-every", type=int)
    train.add_argument("--out", help="Language file to write")

    codebook = subparsers.add_parser("codebook", help="Build clouds, codebook and transfer tensor")
    codebook.add_argument("--seed", type=int, required=True)
    codebook.add_argument("--source", help="Source language file")
    codebook.add_argument("--target", help="Target language file")
    codebook.add_argument("--samples", type=int, help="Cloud samples M")
    codebook.add_argument("--reg", type=float, help="Covariance regularizer")
    codebook.add_argument("--exhaustive", action="store_true", default=None,
                          help="Enumerate observations instead of sampling")
    codebook.add_argument("--out", help="Artifact directory")

    ev = subparsers.add_parser("eval", help="Evaluate one strategy at one SNR")
    ev.add_argument("--seed", type=int, required=True)
    ev.add_argument("--source")
    ev.add_argument("--target")
    ev.add_argument("--artifacts", help="Directory written by 'codebook'")
    ev.add_argument("--strategy", choices=STRATEGIES)
    ev.add_argument("--policy", choices=sorted(POLICY_STRATEGY), help="Shortcut for the cross strategies")
    ev.add_argument("--decoder", choices=DECODER_MODES)
    ev.add_argument("--snr", help="SNR in dB (or 'noiseless')")
    ev.add_argument("--episodes", type=int)
    ev.add_argument("--trace", help="Write the per-step policy trace CSV here")
    ev.add_argument("--out", help="Also write the result as JSON")

    sw = subparsers.add_parser("sweep", help="Strategies x SNRs x seeds -> CSV")
    sw.add_argument("--seed", type=int, required=True)
    sw.add_argument("--source")
    sw.add_argument("--target")
    sw.add_argument("--artifacts", help="Directory written by 'codebook' (built in memory when unset)")
    sw.add_argument("--samples", type=int)
    sw.add_argument("--reg", type=float)
    sw.add_argument("--snr-list", help="Comma-separated SNRs in dB")
    sw.add_argument("--episodes", type=int)
    sw.add_argument("--n-seeds", type=int)
    sw.add_argument("--seeds", help="Comma-separated evaluation seeds (overrides --n-seeds)")
    sw.add_argument("--strategies", help="Comma-separated strategies")
    sw.add_argument("--decoder", help="Comma-separated decoder modes")
    sw.add_argument("--out", help="Results CSV")

    raster = subparsers.add_parser("raster", help="Partition raster of one language")
    raster.add_argument("--seed", type=int)
    raster.add_argument("--language", help="Language file")
    raster.add_argument("--bounds", help="xmin,xmax,ymin,ymax")
    raster.add_argument("--resolution", type=int)
    raster.add_argument("--out", help="PGM file")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(override=False)
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        level = log_level(args.log_level)
    except ValueError as e:
        parser.error(str(e))
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    cli_values = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level")}
    try:
        settings = resolve_settings(args.command, cli_values, args.config)
        result = HANDLERS[args.command](settings)
    except Exception as e:
        if env_flag("SEMEQ_DEBUG"):
            traceback.print_exc()
        message = " ".join(str(e).split()) or type(e).__name__
        print(f"error: {message}", file=sys.stderr)
        return 1

    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
