"""Desk-scale multi-agent reward optimization lab for a hidden-role deduction game."""

from .balance import (BalanceWeights, EmptyCellError, FactionStats, apply_balance, balance,
                      compute_balance, compute_stats)
from .game import (Action, ActionKind, Faction, GameConfig, GameError, GameState, Outcome, Phase,
                   apply_action, legal_actions, load_config, new_game, resolve_votes)
from .metrics import EvalConfig, MetricsReport, compare, evaluate
from .optim import (LossConfig, Method, TrainConfig, TrainReport, batch_grad, batch_loss,
                    sample_loss, sft_grad, sft_loss, train)
from .policy import (PolicyParams, distribution, featurize, grad_log_prob, load_policy,
                     sample_action, save_policy)
from .rollout import (Dataset, Label, TrainingSample, Trajectory, collect_dataset,
                      expand_rewards, load_dataset, run_episode, save_dataset)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "BalanceWeights",
    "Dataset",
    "EmptyCellError",
    "EvalConfig",
    "Faction",
    "FactionStats",
    "GameConfig",
    "GameError",
    "GameState",
    "Label",
    "LossConfig",
    "Method",
    "MetricsReport",
    "Outcome",
    "Phase",
    "PolicyParams",
    "TrainConfig",
    "TrainReport",
    "TrainingSample",
    "Trajectory",
    "apply_action",
    "apply_balance",
    "balance",
    "batch_grad",
    "batch_loss",
    "collect_dataset",
    "compare",
    "compute_balance",
    "compute_stats",
    "distribution",
    "evaluate",
    "expand_rewards",
    "featurize",
    "grad_log_prob",
    "legal_actions",
    "load_config",
    "load_dataset",
    "load_policy",
    "new_game",
    "resolve_votes",
    "run_episode",
    "sample_action",
    "sample_loss",
    "save_dataset",
    "save_policy",
    "sft_grad",
    "sft_loss",
    "train",
]
