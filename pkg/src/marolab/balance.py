"""Multi-faction reward balancing.

Every (faction, label) cell is rescaled so it carries the same total mass
``credit * balance_weight``. The total mass over all cells is preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .game import Faction
from .rollout import CELLS, Dataset, Label

Cell = tuple[Faction, Label]


class EmptyCellError(ValueError):
    pass


def cell_name(cell: Cell) -> str:
    return f"({cell[0].value.capitalize()}, {cell[1].value.capitalize()})"


@dataclass(frozen=True)
class FactionStats:
    mass: dict[Cell, float]
    count: dict[Cell, int]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.mass.values())

    def to_dict(self) -> dict:
        return {f"{f.value}/{l.value}": {"mass": self.mass[(f, l)], "count": self.count[(f, l)]}
                for f, l in CELLS}


@dataclass(frozen=True)
class BalanceWeights:
    multiplier: dict[Cell, float]

    @classmethod
    def identity(cls) -> "BalanceWeights":
        return cls({c: 1.0 for c in CELLS})

    def to_dict(self) -> dict:
        return {f"{f.value}/{l.value}": m for (f, l), m in self.multiplier.items()}


def compute_stats(dataset: Dataset) -> FactionStats:
    masses: dict[Cell, list[float]] = {c: [] for c in CELLS}
    for s in dataset.samples:
        masses[s.cell].append(s.mass)
    # fsum makes the cell masses independent of row order
    return FactionStats({c: math.fsum(m) for c, m in masses.items()},
                        {c: len(m) for c, m in masses.items()})


def compute_balance(stats: FactionStats, within_faction: bool = False) -> BalanceWeights:
    """Multipliers ``target / mass[cell]``.

    The default target is the mean cell mass over all four cells. With
    ``within_faction`` the target is the mean over each faction's two cells,
    so only the label imbalance inside a faction is corrected.
    """
    for cell in CELLS:
        if not stats.mass[cell] > 0:
            raise EmptyCellError(f"empty cell {cell_name(cell)}")
    if within_faction:
        targets = {(f, l): (stats.mass[(f, Label.DESIRABLE)] + stats.mass[(f, Label.UNDESIRABLE)]) / 2
                   for f, l in CELLS}
    else:
        target = stats.total_mass / len(CELLS)
        targets = {c: target for c in CELLS}
    return BalanceWeights({c: targets[c] / stats.mass[c] for c in CELLS})


def apply_balance(dataset: Dataset, weights: BalanceWeights) -> Dataset:
    samples = tuple(replace(s, balance_weight=s.balance_weight * weights.multiplier[s.cell])
                    for s in dataset.samples)
    return Dataset(samples, dataset.provenance)


def balance(dataset: Dataset, within_faction: bool = False) -> tuple[Dataset, BalanceWeights]:
    weights = compute_balance(compute_stats(dataset), within_faction)
    return apply_balance(dataset, weights), weights
