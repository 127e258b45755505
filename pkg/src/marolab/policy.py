"""Action featurization and per-faction linear-softmax policies."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import (Action, ActionKind, Faction, GameError, GameState, Phase,
                   legal_actions)

NUM_FEATURES = 10
FEATURE_NAMES = (
    "is_share", "is_conceal", "is_inquire", "is_accuse", "is_vote",
    "target_suspicion", "target_is_self", "killer_shares_incriminating",
    "actor_suspicion", "round_fraction",
)


class PolicyError(ValueError):
    pass


def featurize(state: GameState, action: Action) -> np.ndarray:
    if state.phase is Phase.TERMINAL or action not in legal_actions(state):
        raise GameError(f"cannot featurize illegal action {action}")
    return _featurize(state, action)


def _featurize(state: GameState, action: Action) -> np.ndarray:
    f = np.zeros(NUM_FEATURES)
    f[int(action.kind)] = 1.0
    actor = state.turn_seat
    norm = max(1.0, sum(state.suspicion))
    if action.kind in (ActionKind.INQUIRE, ActionKind.ACCUSE, ActionKind.VOTE):
        f[5] = state.suspicion[action.arg] / norm
        f[6] = float(action.arg == actor)
    if (action.kind is ActionKind.SHARE and state.clues[action.arg].incriminating
            and actor == state.killer_seat):
        f[7] = 1.0
    f[8] = state.suspicion[actor] / norm
    f[9] = state.round / (state.config.rounds + 1)
    return f


def feature_matrix(state: GameState, actions: list[Action]) -> np.ndarray:
    """Rows are ``featurize`` for each action, in the given order."""
    return np.stack([_featurize(state, a) for a in actions])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


@dataclass(frozen=True)
class PolicyParams:
    faction: Faction
    theta: tuple[float, ...]
    tag: str = "vanilla"

    def __post_init__(self):
        object.__setattr__(self, "faction", Faction(self.faction))
        theta = tuple(float(x) for x in self.theta)
        if len(theta) != NUM_FEATURES:
            raise PolicyError(f"theta must have {NUM_FEATURES} entries, got {len(theta)}")
        if not all(np.isfinite(theta)):
            raise PolicyError("theta has non-finite entries")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def vanilla(cls, faction: Faction) -> "PolicyParams":
        return cls(faction, (0.0,) * NUM_FEATURES, "vanilla")

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.theta)

    def logits(self, state: GameState, actions: list[Action], feats: np.ndarray) -> np.ndarray:
        return feats @ self.vector


@dataclass(frozen=True)
class ActionDistribution:
    actions: list[Action]
    log_probs: np.ndarray
    features: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def distribution(policy, state: GameState) -> ActionDistribution:
    """Log-softmax over the canonical legal actions.

    ``policy`` is anything with a ``logits(state, actions, feats)`` method;
    ``PolicyParams`` is the trainable one.
    """
    actions = legal_actions(state)
    feats = feature_matrix(state, actions)
    return ActionDistribution(actions, log_softmax(policy.logits(state, actions, feats)), feats)


def sample_index(log_probs: np.ndarray, u: float) -> int:
    """Inverse-CDF pick over the canonical order for a uniform draw ``u`` in [0, 1)."""
    cdf = np.cumsum(np.exp(log_probs))
    return min(int(np.searchsorted(cdf, u, side="right")), len(log_probs) - 1)


def sample_action(policy, state: GameState, rng: np.random.Generator) -> tuple[Action, float]:
    dist = distribution(policy, state)
    i = sample_index(dist.log_probs, rng.random())
    return dist.actions[i], float(dist.log_probs[i])


def score(theta: np.ndarray, feats: np.ndarray, index: int) -> np.ndarray:
    """Gradient of log pi(index) w.r.t. theta for a linear softmax over ``feats``."""
    p = np.exp(log_softmax(feats @ theta))
    return feats[index] - p @ feats


def grad_log_prob(policy: PolicyParams, state: GameState, action: Action) -> np.ndarray:
    actions = legal_actions(state)
    if action not in actions:
        raise GameError(f"cannot differentiate illegal action {action}")
    return score(policy.vector, feature_matrix(state, actions), actions.index(action))


def save_policy(policy: PolicyParams, path: str | Path) -> None:
    rec = {"faction": policy.faction.value, "tag": policy.tag, "theta": list(policy.theta)}
    Path(path).write_text(json.dumps(rec) + "\n")


def load_policy(path: str | Path) -> PolicyParams:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) != 1:
        raise PolicyError(f"{path}: expected one policy record, found {len(lines)}")
    try:
        rec = json.loads(lines[0])
        return PolicyParams(Faction(rec["faction"]), rec["theta"], rec["tag"])
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise PolicyError(f"{path}: malformed policy record: {exc}") from None


def resolve_policy(spec: str, faction: Faction) -> PolicyParams:
    """``"vanilla"`` or a policy file path; the faction must match the slot."""
    policy = PolicyParams.vanilla(faction) if spec == "vanilla" else load_policy(spec)
    if policy.faction is not faction:
        raise PolicyError(f"policy {spec} is for the {policy.faction.value} faction, "
                          f"slot requires {faction.value}")
    return policy
