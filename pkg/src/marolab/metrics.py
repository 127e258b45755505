"""Head-to-head evaluation: faction win rates plus investigation and trust proxies.

The investigation, leak and trust numbers are computable proxies built from
the reveal and vote logs. They are not the LLM-judged social metrics.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

from .game import Faction, GameConfig
from .policy import PolicyParams
from .rollout import run_episode


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    config: GameConfig
    games: int
    killer_policy: PolicyParams
    villager_policy: PolicyParams
    seed: Optional[int] = None  # overrides config.seed when set

    def __post_init__(self):
        if self.games < 1:
            raise EvalError(f"games must be >= 1, got {self.games}")


@dataclass(frozen=True)
class MetricsReport:
    preset: str
    seed: int
    games: int
    killer_policy: str
    villager_policy: str
    killer_wins: int
    villager_wins: int
    villager_incriminating_revealed: int
    incriminating_total: int
    killer_self_revealed: int
    killer_held_incriminating: int
    killer_votes_received: int
    killer_vote_opportunities: int
    villager_votes_received: int
    villager_vote_opportunities: int
    # reserved for judge-scored metrics; never filled here
    interaction: Optional[float] = None
    persona: Optional[float] = None

    @property
    def killer_win_rate(self) -> float:
        return self.killer_wins / self.games

    @property
    def villager_win_rate(self) -> float:
        return self.villager_wins / self.games

    @property
    def villager_investigation(self) -> float:
        return _ratio(self.villager_incriminating_revealed, self.incriminating_total)

    @property
    def killer_leak(self) -> float:
        return _ratio(self.killer_self_revealed, self.killer_held_incriminating)

    @property
    def killer_trust(self) -> float:
        return 1.0 - _ratio(self.killer_votes_received, self.killer_vote_opportunities)

    @property
    def villager_trust(self) -> float:
        return 1.0 - _ratio(self.villager_votes_received, self.villager_vote_opportunities)

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, attr) for name, attr in METRIC_COLUMNS}

    def to_json(self) -> str:
        rec = {"counts": asdict(self), "metrics": self.metrics()}
        return json.dumps(rec, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls(**json.loads(text)["counts"])

    def csv_row(self) -> dict:
        row = {k: getattr(self, k) for k in ID_COLUMNS}
        row.update(self.metrics())
        row.update({k: getattr(self, k) for k in COUNT_COLUMNS})
        return row


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


# (csv column, attribute); "proxy" columns are stand-ins, not judge-scored metrics
METRIC_COLUMNS = (
    ("killer_win_rate", "killer_win_rate"),
    ("villager_win_rate", "villager_win_rate"),
    ("villager_investigation_proxy", "villager_investigation"),
    ("killer_leak_proxy", "killer_leak"),
    ("killer_trust_proxy", "killer_trust"),
    ("villager_trust_proxy", "villager_trust"),
)
LOWER_IS_BETTER = {"killer_leak_proxy"}
ID_COLUMNS = ("preset", "seed", "games", "killer_policy", "villager_policy")
COUNT_COLUMNS = tuple(f.name for f in fields(MetricsReport)
                      if f.name not in ID_COLUMNS and f.name not in ("interaction", "persona"))
CSV_COLUMNS = ID_COLUMNS + tuple(c for c, _ in METRIC_COLUMNS) + COUNT_COLUMNS


def evaluate(cfg: EvalConfig) -> MetricsReport:
    if cfg.killer_policy.faction is not Faction.KILLER:
        raise EvalError(f"killer slot got a {cfg.killer_policy.faction.value} policy")
    if cfg.villager_policy.faction is not Faction.VILLAGER:
        raise EvalError(f"villager slot got a {cfg.villager_policy.faction.value} policy")
    game_cfg = cfg.config if cfg.seed is None else replace(cfg.config, seed=cfg.seed)
    totals = dict.fromkeys(COUNT_COLUMNS, 0)
    for ep in range(cfg.games):
        traj = run_episode(game_cfg, ep, cfg.killer_policy, cfg.villager_policy)
        for k, v in episode_counts(traj).items():
            totals[k] += v
    return MetricsReport(game_cfg.name, game_cfg.seed, cfg.games, cfg.killer_policy.tag,
                         cfg.villager_policy.tag, **totals)


def episode_counts(traj) -> dict[str, int]:
    """Per-episode numerators and denominators; reports are sums of these."""
    state = traj.final_state
    P = state.config.num_players
    killer = state.killer_seat
    c = dict.fromkeys(COUNT_COLUMNS, 0)
    c["killer_wins" if traj.outcome.winner is Faction.KILLER else "villager_wins"] = 1

    c["incriminating_total"] = sum(cl.incriminating for cl in state.clues)
    c["killer_held_incriminating"] = sum(cl.incriminating and cl.holder == killer
                                         for cl in state.clues)
    for rev in state.reveal_log:
        clue = state.clues[rev.clue_id]
        if not clue.incriminating:
            continue
        if rev.actor != killer:
            c["villager_incriminating_revealed"] += 1
        elif clue.holder == killer:
            c["killer_self_revealed"] += 1

    tally = traj.outcome.vote_tally
    c["killer_votes_received"] = tally[killer]
    c["killer_vote_opportunities"] = P - 1
    c["villager_votes_received"] = sum(tally) - tally[killer]
    c["villager_vote_opportunities"] = (P - 1) * (P - 1)
    return c


def to_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


@dataclass(frozen=True)
class Comparison:
    baseline: MetricsReport
    candidates: tuple[MetricsReport, ...]
    deltas: tuple[dict[str, float], ...]
    flags: tuple[dict[str, str], ...] = field(default=())

    def render(self) -> str:
        names = [c for c, _ in METRIC_COLUMNS]
        width = max(len(n) for n in names) + 2
        label = lambda r: f"{r.killer_policy} vs {r.villager_policy} (seed {r.seed})"
        lines = [f"baseline: {label(self.baseline)}  [{self.baseline.preset}]",
                 "metrics marked _proxy are log-derived stand-ins"]
        for cand, delta, flag in zip(self.candidates, self.deltas, self.flags):
            lines.append("")
            lines.append(f"candidate: {label(cand)}")
            for n in names:
                lines.append(f"  {n:<{width}}{cand.metrics()[n]:>9.4f}  {delta[n]:+9.4f}  {flag[n]}")
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[MetricsReport]) -> Comparison:
    if len(reports) < 2:
        raise EvalError("compare needs at least 2 reports")
    presets = {r.preset for r in reports}
    if len(presets) > 1:
        raise EvalError(f"mixed config presets: {sorted(presets)}")
    base = reports[0].metrics()
    deltas, flags = [], []
    for r in reports[1:]:
        d = {k: v - base[k] for k, v in r.metrics().items()}
        deltas.append(d)
        flags.append({k: _flag(k, v) for k, v in d.items()})
    return Comparison(reports[0], tuple(reports[1:]), tuple(deltas), tuple(flags))


def _flag(metric: str, delta: float) -> str:
    if delta == 0:
        return "same"
    better = delta < 0 if metric in LOWER_IS_BETTER else delta > 0
    return "improvement" if better else "regression"
