"""Upper bound on killer win rate when every villager plays the vanilla policy.

Vanilla villagers pick uniformly among legal actions and never read the state,
so their final votes are independent and uniform over the other seats. The
killer's only lever is its own vote. This script enumerates every villager
vote profile and compares a uniform killer vote against a clairvoyant killer
that sees all other ballots before voting (no real policy can do better).

    python scripts/killer_bound.py --players 5 7
"""

import argparse
import itertools
from fractions import Fraction


def _voted_out(tally):
    return tally.index(max(tally))  # lowest tied seat, matching the game rules


def killer_win(players: int) -> tuple[Fraction, Fraction]:
    uniform = clairvoyant = Fraction(0)
    for killer in range(players):
        villagers = [s for s in range(players) if s != killer]
        choices = [[t for t in range(players) if t != v] for v in villagers]
        profiles = list(itertools.product(*choices))
        for profile in profiles:
            base = [0] * players
            for t in profile:
                base[t] += 1
            outcomes = []
            for target in (t for t in range(players) if t != killer):
                tally = list(base)
                tally[target] += 1
                outcomes.append(_voted_out(tally) != killer)
            w = Fraction(1, players * len(profiles))
            uniform += w * Fraction(sum(outcomes), len(outcomes))
            clairvoyant += w * any(outcomes)
    return uniform, clairvoyant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--players", type=int, nargs="+", default=[5, 7])
    args = ap.parse_args()
    print(f"{'P':>3} {'uniform killer':>15} {'clairvoyant':>12} {'max gain (pp)':>14}")
    for p in args.players:
        u, c = killer_win(p)
        print(f"{p:>3} {float(u):>15.6f} {float(c):>12.6f} {100 * float(c - u):>14.3f}")


if __name__ == "__main__":
    main()
