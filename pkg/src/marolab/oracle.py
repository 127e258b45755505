"""Exact win probabilities by walking the full game tree.

Every chance node (the deal, clue garbling, inquiry success and choice) and
every policy decision is expanded with its probability. Only practical for
micro configs, which is what it is for: checking the Monte-Carlo evaluator.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .game import (Faction, GameConfig, GameState, Phase, apply_resolved, chance_outcomes,
                   initial_state)
from .policy import distribution


def _deals(config: GameConfig):
    P, K = config.num_players, config.num_clues
    subsets = list(itertools.combinations(range(K), config.num_incriminating))
    p = 1.0 / (P * P ** K * len(subsets))
    for killer in range(P):
        for holders in itertools.product(range(P), repeat=K):
            for inc in subsets:
                yield p, killer, holders, inc


def _killer_win_prob(state: GameState, killer_policy, villager_policy) -> float:
    if state.phase is Phase.TERMINAL:
        return float(state.outcome.winner is Faction.KILLER)
    policy = killer_policy if state.faction_of(state.turn_seat) is Faction.KILLER else villager_policy
    dist = distribution(policy, state)
    total = 0.0
    for action, lp in zip(dist.actions, dist.log_probs):
        pa = math.exp(lp)
        if pa == 0.0:
            continue
        for pc, reveal in chance_outcomes(state, action):
            nxt = apply_resolved(state, action, reveal)
            total += pa * pc * _killer_win_prob(nxt, killer_policy, villager_policy)
    return total


def exact_win_probabilities(config: GameConfig, killer_policy, villager_policy) -> dict[Faction, float]:
    """Exact ``{faction: P(win)}`` over deals, chance effects and policy choices."""
    rng = np.random.default_rng(0)  # never drawn from; apply_resolved is deterministic
    killer = 0.0
    for p, seat, holders, inc in _deals(config):
        state = initial_state(config, seat, holders, inc, rng)
        killer += p * _killer_win_prob(state, killer_policy, villager_policy)
    return {Faction.KILLER: killer, Faction.VILLAGER: 1.0 - killer}
