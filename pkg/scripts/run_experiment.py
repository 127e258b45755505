"""Desk-scale comparison of vanilla, MARO, MAKTO and SFT for one faction.

Collects vanilla self-play data, trains each method on it, then evaluates the
trained policy against the vanilla opponent over several evaluation seeds.
Writes one metrics CSV plus a delta table against vanilla into --out-dir.

    python scripts/run_experiment.py --config simple --faction killer --out-dir results/
"""

import argparse
import json
import logging
import time
from pathlib import Path

import numpy as np

from marolab.game import Faction, load_config
from marolab.metrics import EvalConfig, compare, evaluate, to_csv
from marolab.optim import Method, TrainConfig, train
from marolab.policy import PolicyParams
from marolab.rollout import collect_dataset

log = logging.getLogger("run_experiment")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="simple")
    ap.add_argument("--faction", choices=[f.value for f in Faction], default="killer")
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--games", type=int, default=1000)
    ap.add_argument("--eval-seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--methods", nargs="+", default=["maro", "makto", "sft"])
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config)
    faction = Faction(args.faction)
    vanilla = {f: PolicyParams.vanilla(f) for f in Faction}
    t0 = time.perf_counter()
    ds = collect_dataset(cfg, args.episodes, vanilla[Faction.KILLER], vanilla[Faction.VILLAGER])
    log.info("collected %d samples from %d episodes in %.1fs", len(ds), args.episodes,
             time.perf_counter() - t0)

    policies = {"vanilla": vanilla[faction]}
    for name in args.methods:
        pol, rep = train(ds, faction, TrainConfig(Method(name), epochs=args.epochs))
        policies[name] = pol
        log.info("%s: loss %.6f -> %.6f", name, rep.epoch_losses[0], rep.epoch_losses[-1])

    args.out_dir.mkdir(parents=True, exist_ok=True)
    reports, summary = [], {}
    for name, pol in policies.items():
        slots = dict(vanilla)
        slots[faction] = pol
        rates = []
        for seed in args.eval_seeds:
            r = evaluate(EvalConfig(cfg, args.games, slots[Faction.KILLER],
                                    slots[Faction.VILLAGER], seed))
            reports.append(r)
            rates.append(r.killer_win_rate if faction is Faction.KILLER else r.villager_win_rate)
        summary[name] = {"per_seed": rates, "mean": float(np.mean(rates))}
        log.info("%s: %s win rate %.4f (per seed %s)", name, faction.value,
                 summary[name]["mean"], rates)

    (args.out_dir / "metrics.csv").write_text(to_csv(reports))
    (args.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    n = len(args.eval_seeds)
    # one comparison per eval seed: vanilla report first, trained ones after
    tables = [compare([reports[i + k * n] for k in range(len(policies))]).render()
              for i in range(n)]
    (args.out_dir / "deltas.txt").write_text("\n".join(tables))
    base = summary["vanilla"]["mean"]
    for name, s in summary.items():
        print(f"{name:>8}  {faction.value} win {s['mean']:.4f}  ({100 * (s['mean'] - base):+.2f} pp)")


if __name__ == "__main__":
    main()
