"""Binary-label log-likelihood optimization against a frozen reference policy.

Each training sample is scored on its own: the implied reward is the scaled
log-probability ratio of the chosen action under the trained and reference
policies, and desirable samples are pushed towards a high reward while
undesirable ones are pushed towards a low one (a KTO-style value function).
SFT and outcome-only (MAKTO) training are provided as baselines.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .balance import BalanceWeights, balance, compute_stats
from .game import Faction
from .policy import NUM_FEATURES, PolicyParams, log_softmax, score
from .rollout import Dataset, Label, TrainingSample, dataset_hash, reexpand


class TrainingError(ValueError):
    pass


class Method(str, enum.Enum):
    MARO = "maro"
    SFT = "sft"
    MAKTO = "makto"


@dataclass(frozen=True)
class LossConfig:
    beta: float = 0.1
    lambda_d: float = 1.0
    lambda_u: float = 1.0
    z0: float = 0.0

    def __post_init__(self):
        vals = (self.beta, self.lambda_d, self.lambda_u, self.z0)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("loss config values must be finite")
        if min(self.beta, self.lambda_d, self.lambda_u) <= 0:
            raise ValueError("beta, lambda_d and lambda_u must be > 0")


@dataclass(frozen=True)
class TrainConfig:
    method: Method = Method.MARO
    epochs: int = 30
    batch_size: int = 64
    lr: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    gamma: float = 0.9
    balance: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr >= 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")

    @property
    def effective_gamma(self) -> float:
        return self.gamma if self.method is Method.MARO else 1.0

    @property
    def effective_balance(self) -> bool:
        return self.balance and self.method is Method.MARO


@dataclass
class TrainReport:
    method: str
    faction: str
    epoch_losses: list[float]
    grad_norms: list[float]
    theta: list[float]
    multipliers: dict
    stats: dict
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        return cls(**json.loads(text))


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _chosen_log_prob(theta: np.ndarray, sample: TrainingSample) -> float:
    return float(log_softmax(sample.turn.features @ theta)[sample.turn.chosen_index])


def _value_and_slope(theta, theta_ref, sample, cfg: LossConfig) -> tuple[float, float]:
    """Unweighted loss and its derivative w.r.t. the chosen log-probability."""
    r = cfg.beta * (_chosen_log_prob(theta, sample) - _chosen_log_prob(theta_ref, sample))
    if sample.label is Label.DESIRABLE:
        s = sigmoid(r - cfg.z0)
        value, slope = cfg.lambda_d * (1.0 - s), -cfg.lambda_d * cfg.beta * s * (1.0 - s)
    else:
        s = sigmoid(cfg.z0 - r)
        value, slope = cfg.lambda_u * (1.0 - s), cfg.lambda_u * cfg.beta * s * (1.0 - s)
    if not (math.isfinite(value) and math.isfinite(slope)):
        raise TrainingError(f"non-finite loss for sample {sample.sample_id}")
    return value, slope


def sample_loss(theta, theta_ref, sample: TrainingSample, cfg: LossConfig = LossConfig()) -> float:
    if sample.turn.features.size == 0:
        raise TrainingError(f"sample {sample.sample_id} has no legal actions")
    value, _ = _value_and_slope(np.asarray(theta, float), np.asarray(theta_ref, float), sample, cfg)
    return value * sample.mass


def _batch_mass(samples: Sequence[TrainingSample]) -> float:
    if not samples:
        raise TrainingError("empty batch")
    return math.fsum(s.mass for s in samples)


def batch_loss(theta, theta_ref, samples: Sequence[TrainingSample], cfg: LossConfig = LossConfig()) -> float:
    norm = _batch_mass(samples)
    return sum(sample_loss(theta, theta_ref, s, cfg) for s in samples) / norm


def batch_grad(theta, theta_ref, samples: Sequence[TrainingSample], cfg: LossConfig = LossConfig()) -> np.ndarray:
    norm = _batch_mass(samples)
    theta, theta_ref = np.asarray(theta, float), np.asarray(theta_ref, float)
    grad = np.zeros(NUM_FEATURES)
    for s in samples:
        _, slope = _value_and_slope(theta, theta_ref, s, cfg)
        grad += (s.mass * slope) * score(theta, s.turn.features, s.turn.chosen_index)
    return grad / norm


def _positives(samples: Sequence[TrainingSample]) -> list[TrainingSample]:
    pos = [s for s in samples if s.label is Label.DESIRABLE]
    if not pos or not math.fsum(s.mass for s in pos) > 0:
        raise TrainingError("no positive samples")
    return pos


def sft_loss(theta, samples: Sequence[TrainingSample]) -> float:
    """Mass-weighted mean negative log-likelihood over desirable samples."""
    pos = _positives(samples)
    theta = np.asarray(theta, float)
    return -sum(s.mass * _chosen_log_prob(theta, s) for s in pos) / _batch_mass(pos)


def sft_grad(theta, samples: Sequence[TrainingSample]) -> np.ndarray:
    pos = _positives(samples)
    theta = np.asarray(theta, float)
    grad = np.zeros(NUM_FEATURES)
    for s in pos:
        grad -= s.mass * score(theta, s.turn.features, s.turn.chosen_index)
    return grad / _batch_mass(pos)


def prepare(dataset: Dataset, faction: Faction, cfg: TrainConfig) -> tuple[list[TrainingSample], BalanceWeights, dict]:
    """Re-expand credits, balance if requested, keep the trained faction's samples."""
    data = reexpand(dataset, cfg.effective_gamma)
    if cfg.effective_balance:
        data, weights = balance(data)
    else:
        weights = BalanceWeights.identity()
    stats = compute_stats(data).to_dict()
    samples = list(data.for_faction(faction).samples)
    if not samples:
        raise TrainingError(f"dataset has no {faction.value} samples")
    return samples, weights, stats


def train(dataset: Dataset, faction: Faction, train_cfg: TrainConfig = TrainConfig(),
          loss_cfg: LossConfig = LossConfig(), tag: Optional[str] = None) -> tuple[PolicyParams, TrainReport]:
    faction = Faction(faction)
    samples, weights, stats = prepare(dataset, faction, train_cfg)
    sft = train_cfg.method is Method.SFT
    if sft:
        _positives(samples)

    theta_ref = np.zeros(NUM_FEATURES)
    theta = theta_ref.copy()
    velocity = np.zeros(NUM_FEATURES)
    rng = np.random.default_rng(train_cfg.seed)
    n, bs = len(samples), train_cfg.batch_size
    epoch_losses, grad_norms = [], []

    for epoch in range(train_cfg.epochs):
        perm = rng.permutation(n)
        losses, norms = [], []
        for b, start in enumerate(range(0, n, bs)):
            batch = [samples[i] for i in sorted(perm[start:start + bs])]
            if sft:
                if not any(s.label is Label.DESIRABLE for s in batch):
                    continue
                loss, grad = sft_loss(theta, batch), sft_grad(theta, batch)
            else:
                loss = batch_loss(theta, theta_ref, batch, loss_cfg)
                grad = batch_grad(theta, theta_ref, batch, loss_cfg)
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise TrainingError(f"non-finite loss at epoch {epoch} batch {b}")
            losses.append(loss)
            norms.append(float(np.linalg.norm(grad)))
            velocity = train_cfg.momentum * velocity + grad
            theta = theta - train_cfg.lr * velocity
        epoch_losses.append(math.fsum(losses) / len(losses))
        grad_norms.append(math.fsum(norms) / len(norms))

    tag = tag or f"{train_cfg.method.value}-{dataset.provenance.get('config_tag', 'data')}"
    policy = PolicyParams(faction, tuple(theta.tolist()), tag)
    report = TrainReport(
        method=train_cfg.method.value,
        faction=faction.value,
        epoch_losses=epoch_losses,
        grad_norms=grad_norms,
        theta=list(policy.theta),
        multipliers=weights.to_dict(),
        stats=stats,
        provenance={
            "dataset_hash": dataset_hash(dataset),
            "dataset": dataset.provenance,
            "train_config": {**asdict(train_cfg), "method": train_cfg.method.value},
            "loss_config": asdict(loss_cfg),
            "num_samples": n,
        },
    )
    return policy, report
