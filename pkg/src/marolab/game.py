"""Hidden-role social-deduction game: one killer against a table of villagers.

Players take turns in ascending seat order over a fixed number of discussion
rounds, sharing or concealing clues, inquiring and accusing, and then cast a
single plurality vote. Villagers win iff the killer is voted out.

All state transitions are pure: ``apply_action`` returns a new ``GameState``.
Randomness lives in the per-episode generator carried by the state, so a game
is reproducible from ``(config.seed, episode_index)`` and the actions taken.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np


class GameError(ValueError):
    """Base class for game rule violations."""


class ConfigError(GameError):
    pass


class IllegalActionError(GameError):
    pass


class Faction(str, enum.Enum):
    KILLER = "killer"
    VILLAGER = "villager"


class Phase(str, enum.Enum):
    DISCUSSION = "discussion"
    VOTE = "vote"
    TERMINAL = "terminal"


class ActionKind(enum.IntEnum):
    # declaration order is the canonical legal-action order
    SHARE = 0
    CONCEAL = 1
    INQUIRE = 2
    ACCUSE = 3
    VOTE = 4


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    arg: Optional[int] = None  # clue id for SHARE, target seat for INQUIRE/ACCUSE/VOTE

    def __str__(self) -> str:
        name = self.kind.name.lower()
        return name if self.arg is None else f"{name}({self.arg})"


def share(clue_id: int) -> Action:
    return Action(ActionKind.SHARE, clue_id)


CONCEAL = Action(ActionKind.CONCEAL)


def inquire(target: int) -> Action:
    return Action(ActionKind.INQUIRE, target)


def accuse(target: int) -> Action:
    return Action(ActionKind.ACCUSE, target)


def vote(target: int) -> Action:
    return Action(ActionKind.VOTE, target)


@dataclass(frozen=True)
class GameConfig:
    num_players: int = 5
    num_clues: int = 6
    num_incriminating: int = 2
    disclosure: str = "single"  # "single" or "multi"
    stages: int = 1
    rounds: int = 3
    noise: float = 0.0
    inquire_success: float = 0.5
    seed: int = 1
    accuse_increment: float = 0.5
    clue_increment: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        def bad(msg):
            raise ConfigError(f"invalid config: {msg}")

        if self.num_players < 3:
            bad(f"num_players must be >= 3, got {self.num_players}")
        if self.num_clues < 1:
            bad(f"num_clues must be >= 1, got {self.num_clues}")
        if not 1 <= self.num_incriminating <= self.num_clues:
            bad(f"num_incriminating must be in [1, num_clues={self.num_clues}], "
                f"got {self.num_incriminating}")
        if self.rounds < 1:
            bad(f"rounds must be >= 1, got {self.rounds}")
        if self.disclosure == "single":
            if self.stages != 1:
                bad(f"single disclosure requires stages == 1, got {self.stages}")
        elif self.disclosure == "multi":
            if not 2 <= self.stages <= self.rounds:
                bad(f"multi disclosure requires 2 <= stages <= rounds={self.rounds}, "
                    f"got {self.stages}")
        else:
            bad(f"disclosure must be 'single' or 'multi', got {self.disclosure!r}")
        if not 0.0 <= self.noise < 1.0:
            bad(f"noise must be in [0, 1), got {self.noise}")
        if not 0.0 < self.inquire_success <= 1.0:
            bad(f"inquire_success must be in (0, 1], got {self.inquire_success}")
        if not 0 <= self.seed < 2**64:
            bad(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (self.accuse_increment > 0 and self.clue_increment > 0):
            bad("suspicion increments must be positive")

    @property
    def turns_per_game(self) -> int:
        return self.num_players * (self.rounds + 1)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(source: str | Path, **overrides) -> GameConfig:
    """Load a config from a preset name (``simple``/``complex``) or a JSON file path."""
    source = str(source)
    if source in PRESETS:
        text = resources.files("marolab.presets").joinpath(f"{source}.json").read_text()
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {source}: {exc}") from None
    known = set(GameConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys in {source}: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return GameConfig(**data)


PRESETS = ("simple", "complex")


@dataclass(frozen=True)
class Role:
    faction: Faction
    seat: int


@dataclass(frozen=True)
class Clue:
    id: int
    holder: int
    incriminating: bool
    dealt_round: int
    revealed: bool = False
    garbled: bool = False


@dataclass(frozen=True)
class Reveal:
    round: int
    actor: int
    clue_id: int
    garbled: bool


@dataclass(frozen=True)
class Outcome:
    winner: Faction
    voted_out: int
    vote_tally: tuple[int, ...]


@dataclass(frozen=True)
class GameState:
    config: GameConfig
    roles: tuple[Role, ...]
    clues: tuple[Clue, ...]
    suspicion: tuple[float, ...]
    round: int
    phase: Phase
    turn_seat: int
    votes: tuple[tuple[int, int], ...]  # (voter, target) in casting order
    rng: np.random.Generator = field(compare=False, repr=False)
    reveal_log: tuple[Reveal, ...] = ()
    outcome: Optional[Outcome] = None

    @property
    def killer_seat(self) -> int:
        return next(r.seat for r in self.roles if r.faction is Faction.KILLER)

    def faction_of(self, seat: int) -> Faction:
        return self.roles[seat].faction

    def is_dealt(self, clue: Clue) -> bool:
        return clue.dealt_round <= self.round

    def fingerprint(self) -> tuple:
        """Hashable snapshot of everything except the generator object."""
        return (self.config, self.roles, self.clues, self.suspicion, self.round,
                self.phase, self.turn_seat, self.votes, self.reveal_log, self.outcome,
                json.dumps(self.rng.bit_generator.state, sort_keys=True))


def episode_seed_sequences(seed: int, episode_index: int) -> tuple[np.random.SeedSequence, ...]:
    """Independent (game, policy) seed streams for one episode."""
    game_ss, policy_ss = np.random.SeedSequence([seed, episode_index]).spawn(2)
    return game_ss, policy_ss


def stage_rounds(config: GameConfig) -> list[int]:
    """Round at which each disclosure stage is dealt."""
    return [s * config.rounds // config.stages for s in range(config.stages)]


def new_game(config: GameConfig, episode_index: int) -> GameState:
    if episode_index < 0:
        raise ConfigError(f"episode_index must be >= 0, got {episode_index}")
    game_ss, _ = episode_seed_sequences(config.seed, episode_index)
    rng = np.random.default_rng(game_ss)
    P, K = config.num_players, config.num_clues
    killer = int(rng.integers(P))
    holders = rng.integers(P, size=K).tolist()
    incriminating = rng.choice(K, size=config.num_incriminating, replace=False).tolist()
    return initial_state(config, killer, holders, incriminating, rng)


def initial_state(config: GameConfig, killer: int, holders, incriminating,
                  rng: Optional[np.random.Generator] = None) -> GameState:
    """Game start for a given deal: killer seat, clue holders and incriminating clue ids."""
    P, K = config.num_players, config.num_clues
    incriminating = set(incriminating)
    batches = np.array_split(np.arange(K), config.stages)
    dealt = [0] * K
    for batch, rnd in zip(batches, stage_rounds(config)):
        for cid in batch:
            dealt[cid] = rnd

    roles = tuple(Role(Faction.KILLER if s == killer else Faction.VILLAGER, s) for s in range(P))
    clues = tuple(Clue(c, int(holders[c]), c in incriminating, dealt[c]) for c in range(K))
    if rng is None:
        rng = np.random.default_rng(0)
    return GameState(config, roles, clues, (0.0,) * P, 0, Phase.DISCUSSION, 0, (), rng)


def legal_actions(state: GameState) -> list[Action]:
    if state.phase is Phase.TERMINAL:
        raise GameError("no legal actions in a terminal state")
    actor = state.turn_seat
    others = [t for t in range(state.config.num_players) if t != actor]
    if state.phase is Phase.VOTE:
        return [vote(t) for t in others]
    actions = [share(c.id) for c in state.clues
               if c.holder == actor and not c.revealed and state.is_dealt(c)]
    actions.append(CONCEAL)
    actions.extend(inquire(t) for t in others)
    actions.extend(accuse(t) for t in others)
    return actions


def _check_legal(state: GameState, action: Action) -> None:
    if state.phase is Phase.TERMINAL:
        raise IllegalActionError(f"{action}: game is over")
    if action not in legal_actions(state):
        raise IllegalActionError(
            f"{action} is illegal for seat {state.turn_seat} in {state.phase.value} "
            f"phase, round {state.round}")


def _inquirable(state: GameState, target: int) -> list[Clue]:
    return [c for c in state.clues
            if c.holder == target and not c.revealed and state.is_dealt(c)]


def chance_outcomes(state: GameState, action: Action) -> list[tuple[float, Optional[tuple[int, bool]]]]:
    """Exact distribution over the random effect of ``action``.

    Each entry is ``(probability, reveal)`` where ``reveal`` is ``(clue_id, garbled)``
    or ``None`` for no reveal. Zero-probability branches are omitted.
    """
    noise = state.config.noise

    def reveal_branches(cid: int, p: float):
        out = [(p * (1.0 - noise), (cid, False))]
        if noise > 0:
            out.append((p * noise, (cid, True)))
        return out

    if action.kind is ActionKind.SHARE:
        return reveal_branches(action.arg, 1.0)
    if action.kind is ActionKind.INQUIRE:
        pool = _inquirable(state, action.arg)
        s = state.config.inquire_success
        if not pool:
            return [(1.0, None)]
        branches = [] if s == 1.0 else [(1.0 - s, None)]
        for c in pool:
            branches.extend(reveal_branches(c.id, s / len(pool)))
        return branches
    return [(1.0, None)]


def apply_resolved(state: GameState, action: Action,
                   reveal: Optional[tuple[int, bool]] = None,
                   rng: Optional[np.random.Generator] = None) -> GameState:
    """Apply ``action`` with its random effect already decided. No legality check."""
    cfg = state.config
    clues, suspicion, log, votes = state.clues, list(state.suspicion), state.reveal_log, state.votes
    actor = state.turn_seat

    if reveal is not None:
        cid, garbled = reveal
        clue = clues[cid]
        clues = clues[:cid] + (replace(clue, revealed=True, garbled=garbled),) + clues[cid + 1:]
        log = log + (Reveal(state.round, actor, cid, garbled),)
        if clue.incriminating and not garbled:
            suspicion[state.killer_seat] += cfg.clue_increment
    if action.kind is ActionKind.ACCUSE:
        suspicion[action.arg] += cfg.accuse_increment
    elif action.kind is ActionKind.VOTE:
        votes = votes + ((actor, action.arg),)

    seat, rnd, phase = actor + 1, state.round, state.phase
    if seat == cfg.num_players:
        seat, rnd = 0, rnd + 1
        if phase is Phase.DISCUSSION and rnd == cfg.rounds:
            phase = Phase.VOTE
        elif phase is Phase.VOTE:
            phase = Phase.TERMINAL

    nxt = replace(state, clues=clues, suspicion=tuple(suspicion), round=rnd, phase=phase,
                  turn_seat=seat, votes=votes, reveal_log=log,
                  rng=state.rng if rng is None else rng)
    if phase is Phase.TERMINAL:
        nxt = replace(nxt, outcome=resolve_votes(nxt))
    return nxt


def apply_action(state: GameState, action: Action) -> GameState:
    _check_legal(state, action)
    branches = chance_outcomes(state, action)
    if len(branches) == 1:
        return apply_resolved(state, action, branches[0][1])
    rng = copy.deepcopy(state.rng)
    u = rng.random()
    acc = 0.0
    chosen = branches[-1][1]
    for p, reveal in branches:
        acc += p
        if u < acc:
            chosen = reveal
            break
    return apply_resolved(state, action, chosen, rng)


def resolve_votes(state: GameState) -> Outcome:
    P = state.config.num_players
    if len(state.votes) != P:
        raise GameError(f"cannot resolve: {len(state.votes)} of {P} votes cast")
    tally = [0] * P
    for _, target in state.votes:
        tally[target] += 1
    voted_out = tally.index(max(tally))  # index() picks the lowest tied seat
    winner = Faction.VILLAGER if voted_out == state.killer_seat else Faction.KILLER
    return Outcome(winner, voted_out, tuple(tally))
