"""Command-line surface: generate, train, attack, report, inspect-model.

Every pipeline command reads one JSON config; flags are overrides of
config fields (named shortcuts for the common ones, --set for the rest),
so the manifest always captures the full resolved configuration.

Exit codes: 0 success, 1 invariant/audit/compliance failure, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .runner import (cmd_attack, cmd_generate, cmd_report, cmd_train,
                     inspect_model_text)

_PAIRING_ALIASES = {"all-pairs": "all_pairs", "random-target": "random_target"}


def _json_or_str(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="run-config JSON file")
    sub.add_argument("--output-dir", default=None,
                     help="override the config's output_dir")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config's seed")
    sub.add_argument("--set", action="append", metavar="PATH=VALUE",
                     dest="sets", default=None,
                     help="override any config field by dotted path; the "
                          "value is parsed as JSON when possible")
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker cap; every computation is deterministic, "
                          "so any value reproduces --jobs 1 exactly")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnshield",
        description="Train weight-constrained classifiers and measure how "
                    "additive evasion attacks fare against them.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("generate", help="write the dataset to disk")
    _add_common(gen)
    gen.add_argument("--task", default=None, help="override the config's task")

    train = commands.add_parser("train", help="train and audit one model")
    _add_common(train)
    train.add_argument("--task", default=None, help="override the config's task")
    train.add_argument("--name", default=None, help="model name (model.name)")
    train.add_argument("--mode", default=None,
                       help="linear constraint mode (model.mode)")
    train.add_argument("--constraint", default=None,
                       help="byte-convnet constraint (model.constraint)")
    train.add_argument("--head", default=None,
                       help="multiclass head: softmax or ova (model.head)")
    train.add_argument("--warm-start", default=None,
                       help="model file to copy the trunk from "
                            "(model.warm_start)")

    attack = commands.add_parser("attack", help="run an attack sweep")
    _add_common(attack)
    attack.add_argument("--kind", default=None,
                        help="attack kind (attack.kind)")
    attack.add_argument("--model", default=None,
                        help="trained model to attack (attack.model)")
    attack.add_argument("--source", default=None,
                        help="substitute model for transfer (attack.source)")
    attack.add_argument("--sweep-pct", type=_float_list, default=None,
                        metavar="P,P,...",
                        help="appended-section sizes as percentages, e.g. "
                             "2,5,10,25,50 (attack.section_pcts)")
    attack.add_argument("--targets", default=None,
                        help="pairing: all-pairs or random-target "
                             "(attack.pairing)")
    attack.add_argument("--p", type=_float_list, default=None,
                        metavar="P,P,...", dest="p_values",
                        help="target confidences, e.g. 0.05,0.1,0.5 "
                             "(attack.p_values)")

    report = commands.add_parser(
        "report", help="consolidate metrics and attack curves")
    _add_common(report)

    inspect = commands.add_parser(
        "inspect-model",
        help="print the most positive and most negative coefficients")
    inspect.add_argument("model_path", help="model-<name>.json file")
    inspect.add_argument("--top-k", type=int, default=10,
                         help="coefficients to show per direction")
    inspect.add_argument("--space", default=None,
                         help="feature-space file for token names")
    return parser


def _collect_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for item in args.sets or []:
        if "=" not in item:
            raise ConfigError(f"--set expects PATH=VALUE, got {item!r}")
        dotted, _, raw = item.partition("=")
        overrides[dotted] = _json_or_str(raw)

    named = {
        "task": "task",
        "output_dir": "output_dir",
        "seed": "seed",
        "name": "model.name",
        "mode": "model.mode",
        "constraint": "model.constraint",
        "head": "model.head",
        "warm_start": "model.warm_start",
        "kind": "attack.kind",
        "model": "attack.model",
        "source": "attack.source",
        "p_values": "attack.p_values",
    }
    for attr, dotted in named.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = value
    if getattr(args, "sweep_pct", None) is not None:
        overrides["attack.section_pcts"] = [p / 100.0 for p in args.sweep_pct]
    if getattr(args, "targets", None) is not None:
        raw = args.targets
        overrides["attack.pairing"] = _PAIRING_ALIASES.get(raw, raw)
    return overrides


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "inspect-model":
        sys.stdout.write(inspect_model_text(Path(args.model_path),
                                            top_k=args.top_k,
                                            space_path=args.space))
        return 0

    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    cfg = load_config(args.config, overrides=_collect_overrides(args))
    if args.command == "generate":
        cmd_generate(cfg)
        print(f"wrote dataset under {cfg.output_dir / 'dataset'}")
    elif args.command == "train":
        print(f"wrote {cmd_train(cfg)}")
    elif args.command == "attack":
        print(f"wrote {cmd_attack(cfg)}")
    else:
        print(f"wrote {cmd_report(cfg)}")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except (ValueError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
