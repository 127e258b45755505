"""Label counts per (faction, label) cell for vanilla self-play data on each preset."""

import argparse

from marolab.game import PRESETS, Faction, load_config
from marolab.policy import PolicyParams
from marolab.rollout import CELLS, Label, collect_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    kp, vp = PolicyParams.vanilla(Faction.KILLER), PolicyParams.vanilla(Faction.VILLAGER)
    header = "  ".join(f"{f.value[0].upper()}/{lab.value[0].upper()}" for f, lab in CELLS)
    print(f"{'preset':<8} {header:>30}  neg/pos")
    for name in PRESETS:
        ds = collect_dataset(load_config(name, seed=args.seed), args.episodes, kp, vp)
        lc = ds.label_counts()
        cells = "  ".join(f"{ds.counts[c]:>5}" for c in CELLS)
        print(f"{name:<8} {cells:>30}  {lc[Label.UNDESIRABLE] / lc[Label.DESIRABLE]:.3f}")


if __name__ == "__main__":
    main()
