"""Command-line entry point: generate, train, compare, pacing-table.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ldts.data import SynthConfig, generate_synthetic, load_dataset, save_dataset, aggregate_features
from ldts.errors import ConfigError, LdtsError
from ldts.nn import save_checkpoint
from ldts.pacing import PacingConfig, PacingKind, pacing_table
from ldts.trainer import Strategy, TrainConfig, TrainResult, train, write_telemetry

log = logging.getLogger("ldts")

RESULT_COLUMNS = ["strategy", "seed", "best_val_acc", "test_acc", "best_epoch", "epochs"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CompareSpec:
    data: Path
    strategies: tuple[Strategy, ...]
    seeds: tuple[int, ...]
    base: TrainConfig

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("compare needs at least one strategy")
        if not self.seeds:
            raise ConfigError("compare needs at least one seed")


def _timestamp_line(args):
    if args.no_timestamp:
        return ""
    now = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    return f"# generated {now}\n"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_results(path):
    if not path.exists():
        return []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _result_row(strategy, seed, result: TrainResult):
    best = result.best
    return {
        "strategy": strategy.value,
        "seed": str(seed),
        "best_val_acc": repr(best.val_acc),
        "test_acc": repr(best.test_acc),
        "best_epoch": str(result.best_epoch),
        "epochs": str(len(result.reports)),
    }


def _format_pm(values):
    values = np.asarray(values, dtype=np.float64)
    # population standard deviation over seeds
    return f"{values.mean():.4f} ± {values.std(ddof=0):.4f}"


def summary_table(rows, strategies):
    out = []
    for strategy in strategies:
        mine = [r for r in rows if r["strategy"] == strategy.value]
        out.append([strategy.value,
                    _format_pm([float(r["best_val_acc"]) for r in mine]),
                    _format_pm([float(r["test_acc"]) for r in mine])])
    return out


# --- argument parsing -----------------------------------------------------


def _common(parser, out_required=False):
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--out", help="output directory" + (" (required)" if out_required else ""))
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation timestamp so outputs are byte-reproducible")
    parser.add_argument("--config", metavar="FILE", help="flat key=value file of flag defaults")


def _train_flags(parser):
    parser.add_argument("--data", help="dataset directory (required)")
    parser.add_argument("--pacing", default="linear", help="linear, root or geom")
    parser.add_argument("--lambda0", type=float, default=0.25)
    parser.add_argument("--T", type=int, default=100, help="epoch at which the full train set is reached")
    parser.add_argument("--lr", type=float, default=0.3)
    parser.add_argument("--max-epochs", type=int, default=1000)
    parser.add_argument("--patience", type=int, default=50)
    parser.add_argument("--hidden", type=int, default=32)


def build_parser():
    parser = argparse.ArgumentParser(prog="ldts", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset directory")
    _common(p, out_required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=1.5)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--aux-types", type=int, default=1)
    p.add_argument("--edges-per-node", type=int, default=5)
    p.add_argument("--homophily", type=float, default=0.7)

    p = sub.add_parser("train", help="train one strategy on a dataset")
    _common(p)
    _train_flags(p)
    p.add_argument("--strategy", default="ldts", choices=[s.value for s in Strategy])

    p = sub.add_parser("compare", help="run a strategy x seed grid and summarise it")
    _common(p)
    _train_flags(p)
    p.add_argument("--strategies", default="plain,clgnn,ldts", help="comma-separated strategy names")
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seeds or a range like 0-4")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--figures", action="store_true", help="also render PNG figures under OUT/figures")

    p = sub.add_parser("pacing-table", help="print epoch,fraction CSV for a schedule")
    _common(p)
    p.add_argument("--kind", default="linear", choices=[k.value for k in PacingKind])
    p.add_argument("--lambda0", type=float, required=False, default=0.25)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--epochs", type=int, help="last epoch to print (default T)")
    p.add_argument("--figure", metavar="PNG", help="also plot all three schedules to this file")
    return parser, sub


def _read_config(path):
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-")] = value
    return values


def _apply_config(subparser, values):
    by_flag = {}
    for action in subparser._actions:
        for flag in action.option_strings:
            by_flag[flag.lstrip("-")] = action
    defaults = {}
    for key, raw in values.items():
        action = by_flag.get(key) or by_flag.get(key.replace("_", "-"))
        if action is None or action.dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[action.dest] = action.type(raw) if action.type else raw
    subparser.set_defaults(**defaults)


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            _apply_config(sub.choices[args.command], _read_config(args.config))
        except (UsageError, ValueError) as exc:
            parser.error(str(exc))
        args = parser.parse_args(argv)
    return parser, args


def _seeds(text):
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def _train_config(args, strategy, seed):
    return TrainConfig(
        strategy=strategy,
        pacing=PacingConfig(args.lambda0, args.T, PacingKind.parse(args.pacing)),
        lr=args.lr,
        max_epochs=args.max_epochs,
        patience=args.patience,
        hidden_dim=args.hidden,
        seed=seed,
    )


# --- commands -------------------------------------------------------------


def cmd_generate(args):
    if not args.out:
        raise UsageError("generate requires --out")
    cfg = SynthConfig(
        n_target=args.n, C=args.classes, d=args.dim, cluster_separation=args.separation,
        noise_fraction=args.noise, aux_types=args.aux_types, edges_per_node=args.edges_per_node,
        homophily=args.homophily, seed=args.seed,
    )
    dataset = generate_synthetic(cfg)
    save_dataset(dataset, args.out)
    flagged = int(dataset.noisy_flags.sum())
    print(f"wrote {dataset.n} nodes, {len(dataset.relations)} relation(s), "
          f"{flagged} corrupted train labels to {args.out}")
    return 0


def _run_one(job):
    config, dataset, features = job
    return train(config, dataset, features)


def cmd_train(args):
    if not args.data:
        raise UsageError("train requires --data")
    config = _train_config(args, Strategy.parse(args.strategy), args.seed)
    dataset = load_dataset(args.data)
    result = train(config, dataset)
    out = Path(args.out or "runs")
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{config.strategy.value}_seed{config.seed}"
    write_telemetry(result.reports, out / f"telemetry_{tag}.csv")
    save_checkpoint(result.params, out / f"model_{tag}.bin")

    path = out / "results.csv"
    rows = [r for r in _read_results(path)
            if (r["strategy"], r["seed"]) != (config.strategy.value, str(config.seed))]
    rows.append(_result_row(config.strategy, config.seed, result))
    text = _csv_text(RESULT_COLUMNS, [[r[c] for c in RESULT_COLUMNS] for r in rows])
    _write_text(path, _timestamp_line(args) + text)
    print(f"val={result.best.val_acc:.4f} test={result.best.test_acc:.4f}")
    return 0


def cmd_compare(args):
    if not args.data:
        raise UsageError("compare requires --data")
    try:
        strategies = tuple(Strategy.parse(s) for s in args.strategies.split(",") if s.strip())
        seeds = _seeds(args.seeds)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    spec = CompareSpec(Path(args.data), strategies, seeds, _train_config(args, Strategy.PLAIN, 0))
    dataset = load_dataset(spec.data)
    features = aggregate_features(dataset)
    grid = [(s, seed) for s in spec.strategies for seed in spec.seeds]
    jobs = [(_train_config(args, s, seed), dataset, features) for s, seed in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]

    out = Path(args.out or "compare")
    (out / "runs").mkdir(parents=True, exist_ok=True)
    rows = []
    for (strategy, seed), result in zip(grid, results):
        write_telemetry(result.reports, out / "runs" / f"telemetry_{strategy.value}_seed{seed}.csv")
        rows.append(_result_row(strategy, seed, result))
        log.info("%s seed=%d val=%.4f test=%.4f", strategy.value, seed, result.best.val_acc, result.best.test_acc)
    stamp = _timestamp_line(args)
    _write_text(out / "results.csv", stamp + _csv_text(RESULT_COLUMNS, [[r[c] for c in RESULT_COLUMNS] for r in rows]))
    table = summary_table(rows, spec.strategies)
    _write_text(out / "summary.csv", stamp + _csv_text(["strategy", "valid", "test"], table))

    if args.figures:
        from ldts import plotting

        telemetry = {s.value: [r.reports for (s2, _), r in zip(grid, results) if s2 is s]
                     for s in spec.strategies}
        plotting.plot_validation_curves(telemetry, out / "figures" / "validation_accuracy.png")
        if "ldts" in telemetry:
            plotting.plot_selection_probability(telemetry["ldts"], out / "figures" / "selection_probability.png")
        plotting.plot_pacing(args.lambda0, args.T, out / "figures" / "pacing.png")

    width = max(len("strategy"), *(len(s.value) for s in spec.strategies))
    print(f"{'strategy':<{width}}  {'valid':<17}  test")
    for name, valid, test in table:
        print(f"{name:<{width}}  {valid:<17}  {test}")
    return 0


def cmd_pacing_table(args):
    cfg = PacingConfig(args.lambda0, args.T, PacingKind.parse(args.kind))
    rows = pacing_table(cfg, args.epochs)
    sys.stdout.write(_csv_text(["epoch", "fraction"], [(t, repr(f)) for t, f in rows]))
    if args.figure:
        from ldts import plotting

        plotting.plot_pacing(args.lambda0, args.T, args.figure)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "compare": cmd_compare,
    "pacing-table": cmd_pacing_table,
}


def main(argv=None) -> int:
    parser, args = parse_args(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"ldts {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (LdtsError, OSError) as exc:
        print(f"ldts {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
