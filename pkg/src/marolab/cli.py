"""Command-line front end: simulate | train | eval | report.

Every command writes its primary outputs plus ``<out>.manifest.json`` holding
the argv, resolved configuration and sha256 hashes of inputs and outputs.
Errors print one line ``error[<CODE>]: <message>`` on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .balance import EmptyCellError
from .game import Faction, GameError, load_config
from .metrics import EvalConfig, EvalError, MetricsReport, compare, evaluate, to_csv
from .optim import LossConfig, Method, TrainConfig, TrainingError, train
from .policy import PolicyError, resolve_policy, save_policy
from .rollout import DatasetError, Label, collect_dataset, load_dataset, save_dataset


class CLIError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(out: str | Path) -> Path:
    return Path(f"{out}.manifest.json")


def write_manifest(command: str, argv: Sequence[str], config: dict, inputs: Sequence[str],
                   outputs: Sequence[str], started: float) -> Path:
    man = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "duration_s": round(time.perf_counter() - started, 3),
    }
    path = manifest_path(outputs[0])
    path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return path


def _policy_input(spec: str) -> list[str]:
    return [] if spec == "vanilla" else [spec]


def _print_counts(dataset) -> None:
    counts = dataset.counts
    print(f"{'faction':<10}{'positive':>10}{'negative':>10}")
    for f in Faction:
        print(f"{f.value:<10}{counts[(f, Label.DESIRABLE)]:>10}{counts[(f, Label.UNDESIRABLE)]:>10}")
    lc = dataset.label_counts()
    pos, neg = lc[Label.DESIRABLE], lc[Label.UNDESIRABLE]
    print(f"{'total':<10}{pos:>10}{neg:>10}")
    ratio = neg / pos if pos else float("inf")
    print(f"episodes={dataset.provenance.get('episodes')} samples={len(dataset)} "
          f"neg/pos={ratio:.3f}")


def cmd_simulate(args, argv) -> int:
    started = time.perf_counter()
    cfg = load_config(args.config, seed=args.seed)
    killer = resolve_policy(args.killer_policy, Faction.KILLER)
    villager = resolve_policy(args.villager_policy, Faction.VILLAGER)
    dataset = collect_dataset(cfg, args.games, killer, villager, args.gamma)
    save_dataset(dataset, args.out)
    _print_counts(dataset)
    inputs = [p for p in (args.config,) if Path(p).is_file()]
    inputs += _policy_input(args.killer_policy) + _policy_input(args.villager_policy)
    write_manifest("simulate", argv, {"game": cfg.to_dict(), "games": args.games,
                                      "gamma": args.gamma}, inputs, [args.out], started)
    return 0


def _report_path(out: str | Path) -> Path:
    return Path(f"{out}.report.json")


def cmd_train(args, argv) -> int:
    started = time.perf_counter()
    dataset = load_dataset(args.data)
    if not len(dataset):
        raise CLIError("E_DATASET", f"{args.data}: dataset is empty")
    tcfg = TrainConfig(method=Method(args.method), epochs=args.epochs, batch_size=args.batch_size,
                       lr=args.lr, momentum=args.momentum, seed=args.seed, gamma=args.gamma,
                       balance=not args.no_balance)
    lcfg = LossConfig(beta=args.beta, lambda_d=args.lambda_d, lambda_u=args.lambda_u, z0=args.z0)
    policy, report = train(dataset, Faction(args.faction), tcfg, lcfg, tag=args.tag)
    save_policy(policy, args.out)
    _report_path(args.out).write_text(report.to_json())
    print(f"trained {args.faction} with {args.method}: loss {report.epoch_losses[0]:.6f} -> "
          f"{report.epoch_losses[-1]:.6f} over {tcfg.epochs} epochs")
    write_manifest("train", argv, {**report.provenance["train_config"],
                                   "loss": report.provenance["loss_config"],
                                   "faction": args.faction},
                   [args.data], [args.out, str(_report_path(args.out))], started)
    return 0


def cmd_eval(args, argv) -> int:
    started = time.perf_counter()
    cfg = load_config(args.config)
    ecfg = EvalConfig(cfg, args.games, resolve_policy(args.killer_policy, Faction.KILLER),
                      resolve_policy(args.villager_policy, Faction.VILLAGER), args.seed)
    report = evaluate(ecfg)
    out = Path(args.out)
    out.write_text(report.to_json())
    csv_path = out.with_suffix(".csv")
    csv_path.write_text(to_csv([report]))
    m = report.metrics()
    print(" ".join(f"{k}={v:.4f}" for k, v in m.items()))
    inputs = [p for p in (args.config,) if Path(p).is_file()]
    inputs += _policy_input(args.killer_policy) + _policy_input(args.villager_policy)
    write_manifest("eval", argv, {"game": cfg.to_dict(), "games": args.games, "seed": args.seed},
                   inputs, [str(out), str(csv_path)], started)
    return 0


def cmd_report(args, argv) -> int:
    started = time.perf_counter()
    reports = []
    for p in args.reports:
        try:
            reports.append(MetricsReport.from_json(Path(p).read_text()))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CLIError("E_REPORT", f"{p}: not a metrics report ({exc})") from None
    out = Path(args.out)
    presets = sorted({r.preset for r in reports})
    if len(presets) > 1:
        raise EvalError(f"mixed config presets: {presets}")
    out.write_text(to_csv(reports))
    delta_path = out.with_suffix(".deltas.txt")
    if len(reports) > 1:
        delta_path.write_text(compare(reports).render())
    else:
        delta_path.write_text("single report; no deltas\n")
    print(delta_path.read_text(), end="")
    write_manifest("report", argv, {"reports": list(args.reports)}, list(args.reports),
                   [str(out), str(delta_path)], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="collect a labeled, expanded dataset")
    p.add_argument("--config", required=True, help="preset name or JSON config path")
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--killer-policy", default="vanilla")
    p.add_argument("--villager-policy", default="vanilla")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train one faction's policy on a dataset")
    p.add_argument("--method", choices=[m.value for m in Method], default="maro")
    p.add_argument("--data", required=True)
    p.add_argument("--faction", choices=[f.value for f in Faction], required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0, help="shuffle seed")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--no-balance", action="store_true")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda-d", type=float, default=1.0)
    p.add_argument("--lambda-u", type=float, default=1.0)
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--tag", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="play trained/vanilla policies head to head")
    p.add_argument("--config", required=True)
    p.add_argument("--games", type=int, default=1000)
    p.add_argument("--killer-policy", default="vanilla")
    p.add_argument("--villager-policy", default="vanilla")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge metrics reports into CSV plus a delta table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


ERROR_CODES = (
    (EmptyCellError, "E_BALANCE"),
    (TrainingError, "E_TRAIN"),
    (DatasetError, "E_DATASET"),
    (PolicyError, "E_POLICY"),
    (EvalError, "E_EVAL"),
    (GameError, "E_CONFIG"),
    (OSError, "E_IO"),
    (ValueError, "E_VALUE"),
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except CLIError as exc:
        code, msg = exc.code, str(exc)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code below
        code = next((c for t, c in ERROR_CODES if isinstance(exc, t)), None)
        if code is None:
            raise
        msg = str(exc) if not isinstance(exc, OSError) else f"{exc.strerror}: {exc.filename}"
    print(f"error[{code}]: {msg}", file=sys.stderr)
    return 1


def replay_manifest(path: str | Path, out_dir: str | Path) -> dict[str, bool]:
    """Re-run a manifest's command with outputs redirected into ``out_dir``.

    Input hashes are verified first. Returns ``{original output: bytes identical}``.
    """
    man = json.loads(Path(path).read_text())
    for p, digest in man["inputs"].items():
        if sha256_file(p) != digest:
            raise CLIError("E_MANIFEST", f"input {p} changed since the manifest was written")
    argv = list(man["argv"])
    i = argv.index("--out")
    orig_out = Path(argv[i + 1])
    argv[i + 1] = str(Path(out_dir) / orig_out.name)
    if main(argv) != 0:
        raise CLIError("E_MANIFEST", f"replay of {path} failed")
    # every output shares the --out basename's directory, so only the directory moves
    return {p: sha256_file(Path(out_dir) / Path(p).name) == digest
            for p, digest in man["outputs"].items()}


if __name__ == "__main__":
    raise SystemExit(main())
