"""Command line front end.

wildlabel run --config FILE [--trace] [--reveal-truth] [--format csv|json]
    plus per-run overrides (--score, --alpha, ...). Exit codes: 0 success,
    2 configuration error, 3 one or more cells failed.
wildlabel oracle-threshold --config FILE
    prints the analytic maximum-ambiguity threshold of a score-space config.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .errors import ConfigurationError
from .harness import (
    ExperimentRunner,
    emit_histograms,
    emit_loss_trace,
    emit_phase1_trace,
    emit_report,
    load_config,
)
from .pools import analytic_max_ambiguity, write_pool
from .scores import SCORE_KINDS
from .search import WINDOW_RULES


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wildlabel")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment grid from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--trace", action="store_true", help="emit per-step search and loss traces")
    run.add_argument("--reveal-truth", action="store_true", help="dump pools with hidden membership columns")
    run.add_argument("--score", choices=SCORE_KINDS)
    run.add_argument("--temperature", type=float)
    run.add_argument("--strategy", help="run only this strategy, overriding the config list")
    run.add_argument("--alpha", type=float)
    run.add_argument("--epochs", type=int)
    run.add_argument("--lr", type=float)
    run.add_argument("--hidden-width", type=int)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--window-rule", choices=WINDOW_RULES)
    run.add_argument("--detector-include-wild-id", action="store_true")

    oracle = sub.add_parser("oracle-threshold", help="print the analytic threshold of a score-space mixture")
    oracle.add_argument("--config", required=True)
    oracle.add_argument("--grid", type=int, help="grid resolution override")
    return parser


def _apply_overrides(cfg, args):
    train_updates = {}
    if args.alpha is not None:
        train_updates["alpha"] = args.alpha
    if args.epochs is not None:
        train_updates["epochs"] = args.epochs
    if args.lr is not None:
        train_updates["learning_rate"] = args.lr
    if args.hidden_width is not None:
        train_updates["hidden_width"] = args.hidden_width
    if args.batch_size is not None:
        train_updates["batch_size"] = args.batch_size
    if args.detector_include_wild_id:
        train_updates["detector_include_wild_id"] = True

    updates = {}
    if train_updates:
        updates["train"] = dataclasses.replace(cfg.train, **train_updates)
    if args.score:
        updates["score_kind"] = args.score
    if args.temperature is not None:
        updates["temperature"] = args.temperature
    if args.strategy:
        updates["strategies"] = (args.strategy,)
    if args.window_rule:
        updates["window_rule"] = args.window_rule
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    runner = ExperimentRunner(cfg)
    report = runner.run()
    out_dir = cfg.output_dir
    paths = emit_report(report, out_dir, args.format)

    for seed in cfg.seeds:
        try:
            ctx = runner.context(seed)
        except Exception:  # pool generation already failed per cell
            continue
        emit_histograms(ctx.pool, os.path.join(out_dir, f"hist_seed{seed}.csv"))
        if args.reveal_truth:
            write_pool(ctx.pool, os.path.join(out_dir, f"pool_seed{seed}.csv"), reveal_truth=True)
    if args.trace:
        for row in report.rows:
            stem = f"{row.strategy}_k{row.budget}_seed{row.seed}"
            if row.selection is not None and row.selection.phase1 is not None:
                emit_phase1_trace(row, os.path.join(out_dir, f"trace_{stem}.jsonl"))
            if row.loss_trace:
                emit_loss_trace(row, os.path.join(out_dir, f"losses_{stem}.csv"))

    for path in paths:
        print(path)
    if report.failures:
        for failure in report.failures:
            print(
                f"cell failed: strategy={failure.strategy} budget={failure.budget} "
                f"seed={failure.seed}: {failure.error}",
                file=sys.stderr,
            )
        return 3
    return 0


def _cmd_oracle_threshold(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode != "score":
        raise ConfigurationError("oracle-threshold needs a score-space config (pool.mode = score)")
    resolution = args.grid if args.grid is not None else cfg.grid_resolution
    lam, _ = analytic_max_ambiguity(cfg.pool_spec, resolution)
    print(repr(lam))
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_oracle_threshold(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
