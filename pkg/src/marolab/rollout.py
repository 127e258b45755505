"""Episode rollouts, outcome labeling and trajectory expansion into training samples."""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .game import (Faction, GameConfig, GameState, Outcome, Phase, apply_action,
                   episode_seed_sequences, new_game)
from .policy import distribution, sample_index

FORMAT_NAME = "marolab-dataset"
FORMAT_VERSION = 1


class DatasetError(ValueError):
    pass


class Label(str, enum.Enum):
    DESIRABLE = "desirable"
    UNDESIRABLE = "undesirable"


CELLS = tuple((f, l) for f in Faction for l in Label)


@dataclass(frozen=True, eq=False)
class TurnRecord:
    episode_id: int
    turn_index: int  # 1-based over the whole episode
    actor: int
    faction: Faction
    features: np.ndarray  # one row per legal action, canonical order
    chosen_index: int
    chosen_log_prob: float

    def __eq__(self, other):
        if not isinstance(other, TurnRecord):
            return NotImplemented
        return (self.episode_id, self.turn_index, self.actor, self.faction, self.chosen_index,
                self.chosen_log_prob) == (other.episode_id, other.turn_index, other.actor,
                                          other.faction, other.chosen_index,
                                          other.chosen_log_prob) \
            and np.array_equal(self.features, other.features)


@dataclass(frozen=True)
class Trajectory:
    episode_id: int
    config_tag: str
    turns: tuple[TurnRecord, ...]
    outcome: Outcome
    final_state: Optional[GameState] = field(default=None, compare=False, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "episode_id": self.episode_id,
            "config_tag": self.config_tag,
            "turns": [_turn_fields(t) for t in self.turns],
            "outcome": {"winner": self.outcome.winner.value, "voted_out": self.outcome.voted_out,
                        "vote_tally": list(self.outcome.vote_tally)},
        })


@dataclass(frozen=True)
class TrainingSample:
    turn: TurnRecord
    label: Label
    credit: float
    balance_weight: float = 1.0

    @property
    def faction(self) -> Faction:
        return self.turn.faction

    @property
    def mass(self) -> float:
        return self.credit * self.balance_weight

    @property
    def cell(self) -> tuple[Faction, Label]:
        return self.turn.faction, self.label

    @property
    def sample_id(self) -> str:
        return f"ep{self.turn.episode_id}/t{self.turn.turn_index}"


@dataclass(frozen=True)
class Dataset:
    samples: tuple[TrainingSample, ...] = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def counts(self) -> dict[tuple[Faction, Label], int]:
        tally = Counter(s.cell for s in self.samples)
        return {c: tally.get(c, 0) for c in CELLS}

    def label_counts(self) -> dict[Label, int]:
        tally = Counter(s.label for s in self.samples)
        return {l: tally.get(l, 0) for l in Label}

    def for_faction(self, faction: Faction) -> "Dataset":
        return Dataset(tuple(s for s in self.samples if s.faction is faction), self.provenance)


def run_episode(config: GameConfig, episode_index: int, killer_policy, villager_policy) -> Trajectory:
    for policy, slot in ((killer_policy, Faction.KILLER), (villager_policy, Faction.VILLAGER)):
        if Faction(policy.faction) is not slot:
            raise ValueError(f"{slot.value} slot got a {Faction(policy.faction).value} policy")
    _, policy_ss = episode_seed_sequences(config.seed, episode_index)
    policy_rng = np.random.default_rng(policy_ss)

    state = new_game(config, episode_index)
    turns = []
    while state.phase is not Phase.TERMINAL:
        actor = state.turn_seat
        faction = state.faction_of(actor)
        policy = killer_policy if faction is Faction.KILLER else villager_policy
        dist = distribution(policy, state)
        i = sample_index(dist.log_probs, policy_rng.random())
        turns.append(TurnRecord(episode_index, len(turns) + 1, actor, faction, dist.features,
                                i, float(dist.log_probs[i])))
        state = apply_action(state, dist.actions[i])
    return Trajectory(episode_index, config.name, tuple(turns), state.outcome, state)


def _credits(turns: Iterable[TurnRecord], gamma: float) -> list[float]:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    turns = list(turns)
    totals = Counter((t.episode_id, t.actor) for t in turns)
    seen: Counter = Counter()
    # turn position per actor follows turn_index order
    order = sorted(range(len(turns)), key=lambda i: (turns[i].episode_id, turns[i].turn_index))
    credit = [0.0] * len(turns)
    for i in order:
        key = (turns[i].episode_id, turns[i].actor)
        seen[key] += 1
        credit[i] = gamma ** (totals[key] - seen[key])
    return credit


def expand_rewards(traj: Trajectory, gamma: float = 0.9) -> list[TrainingSample]:
    """One sample per turn: outcome label for the actor's faction, recency credit gamma^(T-t)."""
    if traj.outcome is None:
        raise ValueError(f"episode {traj.episode_id} is not terminal")
    credits = _credits(traj.turns, gamma)
    winner = traj.outcome.winner
    return [TrainingSample(t, Label.DESIRABLE if t.faction is winner else Label.UNDESIRABLE, c)
            for t, c in zip(traj.turns, credits)]


def reexpand(dataset: Dataset, gamma: float) -> Dataset:
    """Recompute credits with a different gamma; balance weights reset to 1."""
    credits = _credits((s.turn for s in dataset.samples), gamma)
    samples = tuple(replace(s, credit=c, balance_weight=1.0) for s, c in zip(dataset.samples, credits))
    return Dataset(samples, {**dataset.provenance, "gamma": gamma})


def collect_dataset(config: GameConfig, episodes: int, killer_policy, villager_policy,
                    gamma: float = 0.9) -> Dataset:
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    samples = []
    for ep in range(episodes):
        samples.extend(expand_rewards(run_episode(config, ep, killer_policy, villager_policy), gamma))
    provenance = {"config_tag": config.name, "seed": config.seed, "episodes": episodes,
                  "gamma": gamma, "killer_policy": killer_policy.tag,
                  "villager_policy": villager_policy.tag}
    return Dataset(tuple(samples), provenance)


def _turn_fields(t: TurnRecord) -> dict:
    return {"episode_id": t.episode_id, "turn_index": t.turn_index, "actor": t.actor,
            "faction": t.faction.value, "chosen_index": t.chosen_index,
            "chosen_log_prob": t.chosen_log_prob, "feature_matrix": t.features.tolist()}


def dataset_lines(dataset: Dataset) -> list[str]:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, **dataset.provenance}
    lines = [json.dumps(header, sort_keys=True)]
    for s in dataset.samples:
        rec = _turn_fields(s.turn)
        rec.update(label=s.label.value, credit=s.credit, balance_weight=s.balance_weight)
        lines.append(json.dumps(rec, sort_keys=True))
    return lines


def dataset_hash(dataset: Dataset) -> str:
    h = hashlib.sha256()
    for line in dataset_lines(dataset):
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text("\n".join(dataset_lines(dataset)) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        return Dataset()
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    records = []
    for n, line in enumerate(lines, start=1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: malformed record at line {n}: {exc.msg}") from None
    header = records[0]
    if header.get("format") != FORMAT_NAME:
        raise DatasetError(f"{path}: line 1 is not a {FORMAT_NAME} header")
    if header.get("version") != FORMAT_VERSION:
        raise DatasetError(f"{path}: format version {header.get('version')} unsupported "
                           f"(expected {FORMAT_VERSION})")
    provenance = {k: v for k, v in header.items() if k not in ("format", "version")}
    samples = []
    for n, rec in enumerate(records[1:], start=2):
        try:
            feats = np.array(rec["feature_matrix"], dtype=float)
            if feats.ndim != 2 or not 0 <= rec["chosen_index"] < len(feats):
                raise ValueError("feature_matrix/chosen_index mismatch")
            turn = TurnRecord(rec["episode_id"], rec["turn_index"], rec["actor"],
                              Faction(rec["faction"]), feats, rec["chosen_index"],
                              rec["chosen_log_prob"])
            samples.append(TrainingSample(turn, Label(rec["label"]), rec["credit"],
                                          rec["balance_weight"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise DatasetError(f"{path}: malformed record at line {n}: {exc}") from None
    return Dataset(tuple(samples), provenance)
