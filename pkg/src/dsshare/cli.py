"""``dsshare`` command line: synth, train, eval, harness, plot.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
(including training divergence).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from . import experiments
from .agent.checkpoint import CheckpointError
from .agent.td3 import TrainingDiverged
from .harness import HarnessError
from .metrics import render_table
from .traces import TraceError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _cmd_synth(cfg, args):
    stats = experiments.run_synth(cfg)
    print(f"{'trace':8s} {'mean':>9s} {'std':>9s} {'lag1':>7s}")
    for name, s in stats.items():
        print(f"{name:8s} {s['mean']:9.3f} {s['std']:9.3f} {s['lag1_autocorr']:7.3f}")
    print(f"wrote {cfg.out_dir / 'trace_a.csv'} and {cfg.out_dir / 'trace_b.csv'}")


def _cmd_train(cfg, args):
    _, log = experiments.run_train(cfg)
    tail = log.reward[-min(len(log), 1000):]
    if len(tail):
        print(f"trained {len(log)} steps; mean reward over last {len(tail)} steps: {tail.mean():.5f}")
    else:
        print("trained 0 steps; checkpoint holds the initial networks")
    print(f"wrote {cfg.out_dir / experiments.CHECKPOINT}")


def _cmd_eval(cfg, args):
    result = experiments.run_eval(cfg, args.checkpoint)
    print(render_table([result.metrics[p] for p in cfg.policies]))
    print(f"wrote {cfg.out_dir / experiments.METRICS}")


def _cmd_harness(cfg, args):
    session = experiments.run_harness(cfg, args.checkpoint)
    print(render_table([session.metrics]))
    counts = ", ".join(f"{k}={v}" for k, v in session.message_counts.items())
    print(f"messages: {counts}")
    for msg in session.policies:
        print(f"policy {msg.policy_id}: zeta={msg.zeta} from step {msg.effective_from} checkpoint={msg.checkpoint}")
    for warning in session.warnings:
        print(f"warning: {warning}")
    print(f"wrote {cfg.out_dir / experiments.SESSION_LOG}")


def _cmd_plot(cfg, args):
    for path in experiments.run_plot(cfg):
        print(f"wrote {path}")


COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "harness": _cmd_harness,
    "plot": _cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsshare", description=__doc__.splitlines()[0])
    parser.add_argument("--print-default-config", action="store_true", help="print the default TOML config and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML experiment config")
        p.add_argument("--seed", type=int, help="override agent.seed")
        p.add_argument("--out", help="override run.out_dir")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("eval", "harness"):
            p.add_argument("--checkpoint", type=Path, help="checkpoint file (default: OUT/checkpoint.json)")
        if name == "train":
            p.add_argument("--steps", type=int, help="override train.steps")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.print_default_config:
        print(config_mod.default_config_text(), end="")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_mod.load(args.config, seed=args.seed, out_dir=args.out)
        if getattr(args, "steps", None) is not None:
            if args.steps < 0:
                raise config_mod.ConfigError("--steps must be non-negative")
            cfg = config_mod.build(cfg.raw | {"train": {"steps": args.steps}}, base_dir=cfg.base_dir)
        COMMANDS[args.command](cfg, args)
    except (config_mod.ConfigError, CheckpointError, TraceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (HarnessError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
