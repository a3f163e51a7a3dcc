"""
Episode loop and per-strategy evaluation.

One step: encode with the transmitting language -> equalize (cross_sem /
cross_eff) -> AWGN -> decode with the receiving language -> move. Episodes
that never capture count max_steps.
"""

import csv
import logging
from dataclasses import dataclass, asdict
from typing import Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from channel import ChannelConfig, transmit
from equalizer import EqualizerState, select
from codebook.linear_ot import apply
from gridworld.env import GridConfig, new_episode, obs_index, step
from harness.artifacts import Artifacts
from language.model import Language, encode, greedy_action, sample_action
from semantics.partition import Partition, SampleCloud, atom_of
from utils.validators import validate_output_path, validate_positive_int, validate_snr_db

logger = logging.getLogger(__name__)

STRATEGIES = ("source_matched", "target_matched", "cross_no_eq", "cross_sem", "cross_eff")
DECODER_MODES = ("stochastic", "greedy")
TRACE_COLUMNS = ["episode", "step", "obs", "source_atom", "map_id", "policy"]


@dataclass(frozen=True)
class StrategySpec:
    strategy: str
    decoder_mode: str = "stochastic"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"Unknown strategy {self.strategy!r}. Choose from {STRATEGIES}")
        if self.decoder_mode not in DECODER_MODES:
            raise ValueError(f"Unknown decoder mode {self.decoder_mode!r}. Choose from {DECODER_MODES}")

    @property
    def policy(self) -> str:
        return {"cross_sem": "sem", "cross_eff": "eff"}.get(self.strategy, "none")


class EpisodeOutcome(NamedTuple):
    length: int
    success: bool
    mean_power: float  # mean ‖x‖² of the symbols handed to the channel


@dataclass(frozen=True)
class EvalResult:
    strategy: str
    decoder_mode: str
    snr_db: float
    seed: int
    episodes: int
    mean_length: float
    std_length: float
    success_rate: float
    mean_post_T_power: float

    def to_row(self) -> Dict:
        return asdict(self)


def resolve(spec: StrategySpec,
            art: Artifacts) -> Tuple[Language, Language, SampleCloud, Optional[EqualizerState]]:
    """(transmitter, receiver, transmitter cloud, equalizer) for a strategy."""
    if spec.strategy == "source_matched":
        return art.source_lang, art.source_lang, art.source_cloud, None
    if spec.strategy == "target_matched":
        return art.target_lang, art.target_lang, art.target_cloud, None
    state = art.equalizer(spec.policy) if spec.policy != "none" else None
    return art.source_lang, art.target_lang, art.source_cloud, state


def run_episode(tx_lang: Language, rx_lang: Language, state: Optional[EqualizerState],
                channel: ChannelConfig, grid: GridConfig, decoder_mode: str,
                rng: np.random.Generator, trace: Optional[list] = None,
                episode: int = 0) -> EpisodeOutcome:
    """
    Play one episode.

    Args:
        tx_lang: Language encoding observations
        rx_lang: Language decoding received symbols
        state: Equalizer applied before the channel (None for no equalization)
        channel: AWGN configuration
        grid: Task geometry (must match both languages)
        decoder_mode: "stochastic" samples the interpretation, "greedy" takes argmax
        rng: Stream for the start state, noise and action sampling
        trace: Rows (episode, step, obs, source_atom, map_id, policy) appended when given

    Returns:
        EpisodeOutcome(length, success, mean_power)
    """
    if tx_lang.grid != grid or rx_lang.grid != grid:
        raise ValueError("Languages were trained on a different grid")
    if decoder_mode not in DECODER_MODES:
        raise ValueError(f"Unknown decoder mode {decoder_mode!r}")

    obs = new_episode(grid, rng)
    power = 0.0
    length = 0
    success = False
    for t in range(grid.max_steps):
        sent = encode(tx_lang, obs)
        x = sent
        map_id = None
        if state is not None:
            map_id = select(state, obs)
            if map_id is not None:
                x = apply(state.codebook.maps[map_id], x)
        if trace is not None:
            atom = atom_of(Partition(tx_lang), sent)
            trace.append([episode, t, obs_index(obs, grid), atom,
                          "" if map_id is None else map_id, state.policy if state else "none"])

        power += float(x @ x)
        y = transmit(x, channel, rng)
        if decoder_mode == "greedy":
            action = greedy_action(rx_lang, y)
        else:
            action = sample_action(rx_lang, y, rng)

        outcome = step(obs, action, grid)
        length += 1
        if outcome.terminal:
            success = True
            break
        obs = outcome.next

    return EpisodeOutcome(length=length, success=success, mean_power=power / length)


def _write_trace(rows: list, path: Union[str, Path]):
    path = validate_output_path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(rows)


def evaluate(spec: StrategySpec, art: Artifacts, snr_db, episodes: int, seed: int,
             trace_path: Optional[Union[str, Path]] = None) -> EvalResult:
    """
    Run a strategy for `episodes` episodes at one SNR.

    Episode e draws from default_rng(SeedSequence([seed, e])), so results do
    not depend on execution order. σ is calibrated from the transmitting
    language's cloud power.

    Raises:
        ProvenanceError: Before any episode, if the artifacts do not form one chain
    """
    art.verify()
    episodes = validate_positive_int(episodes, "episodes")
    snr = validate_snr_db(snr_db)

    tx, rx, cloud, state = resolve(spec, art)
    channel = ChannelConfig.from_snr(snr, cloud.avg_power)
    trace = [] if trace_path else None

    lengths = np.zeros(episodes)
    successes = np.zeros(episodes, dtype=bool)
    powers = np.zeros(episodes)
    for e in range(episodes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, e]))
        out = run_episode(tx, rx, state, channel, art.grid, spec.decoder_mode, rng, trace, e)
        lengths[e] = out.length
        successes[e] = out.success
        powers[e] = out.mean_power * out.length

    if trace is not None:
        _write_trace(trace, trace_path)

    result = EvalResult(
        strategy=spec.strategy,
        decoder_mode=spec.decoder_mode,
        snr_db=snr,
        seed=int(seed),
        episodes=episodes,
        mean_length=float(lengths.mean()),
        std_length=float(lengths.std()),
        success_rate=float(successes.mean()),
        mean_post_T_power=float(powers.sum() / lengths.sum()),
    )
    logger.info(f"{spec.strategy}/{spec.decoder_mode} @ {snr:g} dB seed={seed}: "
                f"mean length {result.mean_length:.3f}, success {result.success_rate:.3f}")
    return result
