"""
End-to-end language training with REINFORCE.

The generator table and the interpreter weights are updated jointly; every
transmitted symbol passes through the AWGN channel at the training SNR.
Episodes are rolled out in mini-batches stepped in lockstep (numpy), then
the surrogate

    L = -mean_t [ A_t · log π(a_t | e(o_t) + n_t) + β · H(π(· | e(o_t) + n_t)) ]

is differentiated with torch autograd and minimized with Adam, the learning
rate decaying linearly to `final_lr_fraction` of its initial value. A_t is
the discounted return-to-go G_t minus b(o_t), a moving average of returns
kept per observation, divided by the batch standard deviation when
`normalize_advantages` is set. Any discount in (0, 1] keeps the shortest
path optimal, since every step before capture costs the same. Everything is driven
by one numpy Generator seeded from the caller's seed, so a seed reproduces
the language bit for bit.
"""

import time
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Mapping, Tuple

import numpy as np
import torch

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from channel import ChannelConfig, transmit
from gridworld.env import GridConfig, new_episode, obs_index, transition_table
from gridworld.oracle import mean_optimal_length
from language.model import Decoder, Encoder, Language, init_language, sample_from
from utils.fingerprint import make_fingerprint
from utils.validators import validate_positive_float, validate_positive_int, validate_snr_db

logger = logging.getLogger(__name__)

PARAM_NAMES = ("encoder", "W1", "b1", "W2", "b2")


class TrainingDivergedError(RuntimeError):
    """Parameters became non-finite during training."""

    def __init__(self, episode: int, detail: str = ""):
        self.episode = episode
        super().__init__(f"Training diverged at episode {episode}: {detail or 'non-finite parameters'}")


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 60000
    learning_rate: float = 1e-2
    entropy_bonus: float = 1e-2
    train_snr_db: float = 10.0
    baseline: float = 0.99
    hidden_units: int = 32
    batch_size: int = 8
    temperature: float = 1.0
    log_every: int = 500
    discount: float = 0.9
    normalize_advantages: bool = True
    final_lr_fraction: float = 0.1

    def __post_init__(self):
        validate_positive_int(self.episodes, "episodes")
        validate_positive_float(self.learning_rate, "learning_rate")
        validate_positive_float(self.entropy_bonus, "entropy_bonus", allow_zero=True)
        validate_snr_db(self.train_snr_db)
        if not 0.0 <= float(self.baseline) < 1.0:
            raise ValueError(f"baseline decay must be in [0, 1), got {self.baseline}")
        validate_positive_int(self.hidden_units, "hidden_units")
        validate_positive_int(self.batch_size, "batch_size")
        validate_positive_float(self.temperature, "temperature")
        validate_positive_int(self.log_every, "log_every")
        if not 0.0 < float(self.discount) <= 1.0:
            raise ValueError(f"discount must be in (0, 1], got {self.discount}")
        if not isinstance(self.normalize_advantages, bool):
            raise ValueError(
                f"normalize_advantages must be a boolean, got {self.normalize_advantages!r}")
        if not 0.0 < float(self.final_lr_fraction) <= 1.0:
            raise ValueError(f"final_lr_fraction must be in (0, 1], got {self.final_lr_fraction}")

    @property
    def n_updates(self) -> int:
        return -(-self.episodes // self.batch_size)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "TrainConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data and data[k] is not None}
        if "train_snr_db" in known:
            known["train_snr_db"] = validate_snr_db(known["train_snr_db"])
        return cls(**known)


@dataclass
class RolloutBatch:
    """Flattened transitions of a mini-batch (time-major order)."""
    obs: np.ndarray         # [T] observation indices
    noise: np.ndarray       # [T, 2] channel noise added to e(o)
    actions: np.ndarray     # [T]
    returns: np.ndarray     # [T] returns-to-go
    advantages: np.ndarray  # [T]
    lengths: np.ndarray     # [episodes]
    captured: np.ndarray    # [episodes] bool


def _numpy_params(lang: Language) -> Dict[str, np.ndarray]:
    d = lang.decoder
    return {"encoder": lang.encoder.table, "W1": d.W1, "b1": d.b1, "W2": d.W2, "b2": d.b2}


def _probs(params: Dict[str, np.ndarray], x: np.ndarray, temperature: float) -> np.ndarray:
    h = np.tanh(x @ params["W1"].T + params["b1"])
    z = (h @ params["W2"].T + params["b2"]) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def collect_rollouts(params: Dict[str, np.ndarray], grid: GridConfig, n_episodes: int,
                     channel: ChannelConfig, temperature: float,
                     rng: np.random.Generator, discount: float = 1.0) -> RolloutBatch:
    """
    Roll out n_episodes in lockstep with stochastic decoding.

    Returns-to-go are discounted by `discount` per step (1 keeps them undiscounted).

    Returns:
        RolloutBatch with returns filled and advantages zeroed
    """
    trans = transition_table(grid)
    table = params["encoder"]
    T = grid.max_steps

    idx = np.array([obs_index(new_episode(grid, rng), grid) for _ in range(n_episodes)], dtype=np.int64)
    active = np.ones(n_episodes, dtype=bool)
    captured = np.zeros(n_episodes, dtype=bool)

    obs_mat = np.zeros((T, n_episodes), dtype=np.int64)
    act_mat = np.zeros((T, n_episodes), dtype=np.int64)
    rew_mat = np.zeros((T, n_episodes))
    noise_mat = np.zeros((T, n_episodes, 2))
    mask = np.zeros((T, n_episodes), dtype=bool)

    for t in range(T):
        live = np.flatnonzero(active)
        if live.size == 0:
            break
        cur = idx[live]
        sent = table[cur]
        received = transmit(sent, channel, rng)
        probs = _probs(params, received, temperature)
        actions = sample_from(probs, rng.random(live.size))
        nxt = trans[cur, actions]
        hit = nxt < 0

        obs_mat[t, live] = cur
        act_mat[t, live] = actions
        rew_mat[t, live] = np.where(hit, 0.0, -1.0)
        noise_mat[t, live] = received - sent
        mask[t, live] = True

        idx[live[~hit]] = nxt[~hit]
        captured[live[hit]] = True
        active[live[hit]] = False

    ret_mat = np.zeros_like(rew_mat)
    acc = np.zeros(n_episodes)
    for t in range(T - 1, -1, -1):
        acc = rew_mat[t] + discount * acc
        ret_mat[t] = acc

    return RolloutBatch(
        obs=obs_mat[mask],
        noise=noise_mat[mask],
        actions=act_mat[mask],
        returns=ret_mat[mask],
        advantages=np.zeros(int(mask.sum())),
        lengths=mask.sum(axis=0),
        captured=captured,
    )


class MovingBaseline:
    """Per-observation exponential moving average of returns-to-go."""

    def __init__(self, n_observations: int, decay: float):
        self.decay = decay
        self.value = np.zeros(n_observations)
        self.seen = np.zeros(n_observations, dtype=bool)

    def advantages(self, batch: RolloutBatch) -> np.ndarray:
        """G − b(o) with the pre-update baseline; first visits start the average at G."""
        counts = np.bincount(batch.obs, minlength=self.value.size)
        sums = np.bincount(batch.obs, weights=batch.returns, minlength=self.value.size)
        visited = counts > 0
        fresh = visited & ~self.seen
        means = np.divide(sums, counts, out=np.zeros_like(sums), where=visited)
        self.value[fresh] = means[fresh]
        self.seen |= visited

        adv = batch.returns - self.value[batch.obs]

        # k visits in one batch act as k consecutive updates towards their mean
        keep = self.decay ** counts
        self.value = np.where(visited, keep * self.value + (1.0 - keep) * means, self.value)
        return adv


def scale_advantages(adv: np.ndarray) -> np.ndarray:
    """Divide by the batch standard deviation; a constant batch is returned unchanged."""
    sd = float(np.std(adv))
    return adv / sd if sd > 0 else adv


def surrogate_loss(params: Dict[str, torch.Tensor], batch: RolloutBatch,
                   entropy_bonus: float, temperature: float) -> torch.Tensor:
    """REINFORCE surrogate with entropy bonus for a frozen batch."""
    obs = torch.as_tensor(batch.obs, dtype=torch.long)
    actions = torch.as_tensor(batch.actions, dtype=torch.long)
    noise = torch.as_tensor(batch.noise, dtype=torch.float64)
    adv = torch.as_tensor(batch.advantages, dtype=torch.float64)

    x = params["encoder"][obs] + noise
    h = torch.tanh(x @ params["W1"].T + params["b1"])
    logits = (h @ params["W2"].T + params["b2"]) / temperature
    logp = torch.log_softmax(logits, dim=-1)
    chosen = logp.gather(1, actions[:, None]).squeeze(1)
    entropy = -(logp.exp() * logp).sum(dim=-1)
    return -(adv * chosen + entropy_bonus * entropy).mean()


def greedy_rollouts(lang: Language) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noiseless greedy episode from every valid start observation.

    Returns:
        (lengths, captured) indexed by start observation; episodes that never
        capture have length max_steps
    """
    grid = lang.grid
    trans = transition_table(grid)
    policy = np.argmax(lang.decoder.probs(lang.encoder.table), axis=1)

    idx = np.arange(grid.n_observations)
    active = np.ones(idx.size, dtype=bool)
    lengths = np.zeros(idx.size, dtype=np.int64)
    for _ in range(grid.max_steps):
        live = np.flatnonzero(active)
        if live.size == 0:
            break
        lengths[live] += 1
        nxt = trans[idx[live], policy[idx[live]]]
        hit = nxt < 0
        active[live[hit]] = False
        idx[live[~hit]] = nxt[~hit]
    return lengths, ~active


def greedy_mean_length(lang: Language) -> float:
    """Exact expected episode length of noiseless greedy decoding under uniform μ."""
    return float(greedy_rollouts(lang)[0].mean())


def _to_language(params: Dict[str, torch.Tensor], grid: GridConfig, temperature: float,
                 meta: Dict) -> Language:
    arr = {k: v.detach().numpy().copy() for k, v in params.items()}
    decoder = Decoder(W1=arr["W1"], b1=arr["b1"], W2=arr["W2"], b2=arr["b2"], temperature=temperature)
    return Language(encoder=Encoder(arr["encoder"]), decoder=decoder, grid=grid, train_meta=meta)


def train_language(grid: GridConfig, tc: TrainConfig, seed: int) -> Language:
    """
    Train one language from scratch.

    Args:
        grid: Task geometry
        tc: Hyperparameters
        seed: Sole source of randomness

    Returns:
        Trained Language with train_meta (seed, hyperparameters, exact greedy score)

    Raises:
        TrainingDivergedError: If any parameter becomes non-finite
    """
    torch.use_deterministic_algorithms(True)
    rng = np.random.default_rng(seed)
    init = init_language(grid, tc.hidden_units, rng, temperature=tc.temperature)

    params = {k: torch.tensor(v, dtype=torch.float64, requires_grad=True)
              for k, v in _numpy_params(init).items()}
    optimizer = torch.optim.Adam(list(params.values()), lr=tc.learning_rate)
    schedule = torch.optim.lr_scheduler.LinearLR(
        optimizer, start_factor=1.0, end_factor=tc.final_lr_fraction, total_iters=tc.n_updates)
    baseline = MovingBaseline(grid.n_observations, tc.baseline)

    logger.info(f"Training language: seed={seed}, episodes={tc.episodes}, batch={tc.batch_size}, "
                f"updates={tc.n_updates}, snr={tc.train_snr_db} dB, H={tc.hidden_units}, "
                f"discount={tc.discount}")
    start = time.time()

    done = 0
    n_batches = 0
    while done < tc.episodes:
        n = min(tc.batch_size, tc.episodes - done)
        snapshot = {k: v.detach().numpy() for k, v in params.items()}

        power = float(np.mean(np.sum(snapshot["encoder"] ** 2, axis=1)))
        if not np.isfinite(power) or power <= 0:
            raise TrainingDivergedError(done, f"symbol power {power}")
        channel = ChannelConfig.from_snr(tc.train_snr_db, power)

        batch = collect_rollouts(snapshot, grid, n, channel, tc.temperature, rng, tc.discount)
        adv = baseline.advantages(batch)
        batch.advantages = scale_advantages(adv) if tc.normalize_advantages else adv

        optimizer.zero_grad()
        loss = surrogate_loss(params, batch, tc.entropy_bonus, tc.temperature)
        loss.backward()
        optimizer.step()
        schedule.step()

        done += n
        n_batches += 1
        with torch.no_grad():
            if not all(torch.isfinite(p).all() for p in params.values()):
                raise TrainingDivergedError(done)

        if n_batches % tc.log_every == 0:
            logger.info(f"episode {done}/{tc.episodes}: mean length {batch.lengths.mean():.2f}, "
                        f"capture rate {batch.captured.mean():.3f}, power {power:.3f}")

    meta = {
        "seed": int(seed),
        "train_config": tc.to_dict(),
        "inputs_hash": make_fingerprint({"grid": grid.to_dict(), "train_config": tc.to_dict(), "seed": int(seed)}),
    }
    lang = _to_language(params, grid, tc.temperature, meta)

    lengths, captured = greedy_rollouts(lang)
    greedy = float(lengths.mean())
    optimal = mean_optimal_length(grid)
    meta.update({
        "greedy_mean_length": greedy,
        "mean_optimal_length": optimal,
        "length_ratio": greedy / optimal,
        "greedy_success_rate": float(captured.mean()),
    })
    logger.info(f"✅ Trained language seed={seed} in {time.time() - start:.1f}s: greedy mean length "
                f"{greedy:.3f} (optimal {optimal:.3f}, ratio {greedy / optimal:.3f})")
    return lang
