"""Command-line front end.

Subcommands: distribute (list distribution only), agree (full pipeline),
calibrate, oracle (forgery / measurement oracles), replay.  Exit codes:
0 success, 1 configuration error, 2 internal error, 3 distribution aborted
in single-run mode.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CalibrationFailure, ConfigError, QbaError, TooLarge
from .forgery import forgery_oracle
from .harness import (
    ScenarioConfig,
    calibrate_length,
    emit_report,
    replay_trace,
    run_scenario,
)
from .lists import Alphabet
from .statevector import build_type3_statevector, measurement_distribution

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTERNAL = 2
EXIT_ABORTED = 3


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a flat JSON scenario document")
    parser.add_argument("--seed", type=int, help="campaign master seed (required)")
    parser.add_argument("--runs", type=int, help="number of seeded runs")
    parser.add_argument("--n", type=int, help="party count including the commander")
    parser.add_argument("--m", type=int, help="tolerated dishonest count")
    parser.add_argument("--w", type=int, help="alphabet bound (symbols are 0..w)")
    parser.add_argument("--order", type=int, dest="commander_order",
                        help="the commander's order value")
    parser.add_argument("--list-length", type=int, dest="list_length")
    parser.add_argument("--min-support", type=int, dest="min_support")
    parser.add_argument("--decoy-count", type=int, dest="decoy_count")
    parser.add_argument("--strategy", help="Byzantine strategy name")
    parser.add_argument("--corrupt", help="comma-separated corrupt party ids")
    parser.add_argument("--channel-adversary", dest="channel_adversary",
                        help="quantum channel adversary name")
    parser.add_argument("--channel-target", type=int, dest="channel_target")
    parser.add_argument("--trace-out", dest="trace_out", help="JSONL trace output path")
    parser.add_argument("--format", choices=("text", "json"), default="text")


def _scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    overrides = {
        "seed": args.seed,
        "runs": args.runs,
        "n": args.n,
        "m": args.m,
        "w": args.w,
        "commander_order": args.commander_order,
        "list_length": args.list_length,
        "min_support": args.min_support,
        "decoy_count": args.decoy_count,
        "strategy": args.strategy,
        "channel_adversary": args.channel_adversary,
        "channel_target": args.channel_target,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.corrupt is not None:
        data["corrupt"] = [int(x) for x in args.corrupt.split(",") if x != ""]
    return ScenarioConfig.from_dict(data)


def _cmd_campaign(args: argparse.Namespace, distribute_only: bool) -> int:
    config = _scenario_from_args(args)
    report = run_scenario(
        config, distribute_only=distribute_only, trace_path=args.trace_out
    )
    print(emit_report(report, args.format))
    if config.runs == 1 and report.aborts == 1:
        return EXIT_ABORTED
    return EXIT_OK


def _cmd_calibrate(args: argparse.Namespace) -> int:
    length, support = calibrate_length(
        args.n, args.w, args.correlation_prob, args.epsilon
    )
    out = {"list_length": length, "min_support": support, "epsilon": args.epsilon}
    if args.format == "json":
        print(json.dumps(out, sort_keys=True))
    else:
        print(f"list_length  {length}")
        print(f"min_support  {support}")
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.kind == "forgery":
        value = forgery_oracle(args.n, Alphabet(args.w), args.length, args.support)
        print(json.dumps({"forgery_probability": value}))
    else:
        offsets = tuple(int(x) for x in args.offsets.split(",")) if args.offsets else ()
        state = build_type3_statevector(args.d, len(offsets) + 1, offsets, args.s)
        dist = measurement_distribution(state)
        printable = {",".join(map(str, k)): v for k, v in sorted(dist.items())}
        print(json.dumps(printable, sort_keys=True))
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    matched, _ = replay_trace(args.trace)
    print("replay: identical" if matched else "replay: MISMATCH")
    return EXIT_OK if matched else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qba",
        description="Detectable Byzantine agreement over Q-correlated lists: "
        "simulator and adversarial test harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distribute", help="run the list-distribution phase only")
    _add_scenario_flags(p)
    p.set_defaults(func=lambda a: _cmd_campaign(a, distribute_only=True))

    p = sub.add_parser("agree", help="run distribution plus the agreement protocol")
    _add_scenario_flags(p)
    p.set_defaults(func=lambda a: _cmd_campaign(a, distribute_only=False))

    p = sub.add_parser("calibrate", help="derive list length and support floor")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--correlation-prob", type=float, default=0.5,
                   dest="correlation_prob")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("oracle", help="expose the exact oracles")
    kinds = p.add_subparsers(dest="kind", required=True)
    pf = kinds.add_parser("forgery", help="exact forgery success probability")
    pf.add_argument("--n", type=int, required=True)
    pf.add_argument("--w", type=int, required=True)
    pf.add_argument("--length", type=int, required=True)
    pf.add_argument("--support", type=int, required=True)
    pf.set_defaults(func=_cmd_oracle)
    pm = kinds.add_parser("measure", help="Born-rule outcome distribution")
    pm.add_argument("--d", type=int, required=True)
    pm.add_argument("--offsets", help="comma-separated offsets (q-1 of them)")
    pm.add_argument("--s", type=int, default=0, help="phase parameter")
    pm.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("replay", help="re-execute a recorded trace and compare")
    p.add_argument("trace")
    p.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CalibrationFailure, TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QbaError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
