from dataclasses import replace

import numpy as np
import pytest

from marolab.game import (ActionKind, Faction, GameConfig, initial_state,
                          load_config)
from marolab.policy import PolicyParams
from marolab.rollout import collect_dataset


class ScriptedPolicy:
    """Deterministic test policy: picks the highest-priority legal action.

    ``choose(state, actions)`` returns the index to play; every other action
    gets probability (numerically) zero.
    """

    def __init__(self, faction, choose, tag="scripted"):
        self.faction = Faction(faction)
        self.choose = choose
        self.tag = tag

    def logits(self, state, actions, feats):
        out = np.full(len(actions), -1e6)
        out[self.choose(state, actions)] = 0.0
        return out


def vote_for_killer(state, actions):
    for i, a in enumerate(actions):
        if a.kind is ActionKind.VOTE and a.arg == state.killer_seat:
            return i
    return 0


def never_share_incriminating(state, actions):
    for i, a in enumerate(actions):
        if a.kind is ActionKind.CONCEAL:
            return i
        if a.kind is ActionKind.SHARE and not state.clues[a.arg].incriminating:
            return i
    return 0


@pytest.fixture(scope="session")
def simple():
    return load_config("simple")


@pytest.fixture(scope="session")
def complex_cfg():
    return load_config("complex")


@pytest.fixture(scope="session")
def vanilla():
    return PolicyParams.vanilla(Faction.KILLER), PolicyParams.vanilla(Faction.VILLAGER)


@pytest.fixture(scope="session")
def small_dataset(simple, vanilla):
    return collect_dataset(simple, 30, *vanilla, gamma=0.9)


def make_state(config=None, killer=3, holders=None, incriminating=(0,), **fields):
    """A fresh game with a chosen deal, then selected fields overwritten."""
    config = config or GameConfig(name="test")
    holders = holders if holders is not None else [0] * config.num_clues
    state = initial_state(config, killer, holders, incriminating)
    return replace(state, **fields)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
