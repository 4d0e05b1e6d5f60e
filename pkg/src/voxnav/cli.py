"""Command-line front end: single episode runs, batch evaluation tables,
and export of plot-ready artifacts.

Exit codes: 0 success, 2 usage/config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import env as envmod
from . import policies

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3

EVAL_COLUMNS = ("condition", "success", "timeout", "crash", "exploration",
                "errors")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load(args) -> envmod.EnvConfig:
    if args.config is not None:
        cfg = cfgmod.load_config(args.config)
    else:
        cfg = envmod.EnvConfig()
    if getattr(args, "obstacles_single", None) is not None:
        cfg = replace(cfg, world=replace(cfg.world,
                                         obstacle_count=args.obstacles_single))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.policy not in policies.POLICIES:
        print(f"unknown policy {args.policy!r}; available: "
              f"{', '.join(sorted(policies.POLICIES))}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    env = envmod.Env(cfg)
    policy = policies.make_policy(args.policy, seed=args.seed)
    lines = [json.dumps({"type": "header", "seed": args.seed,
                         "policy": args.policy,
                         "config": cfgmod.config_to_dict(cfg)},
                        sort_keys=True)]

    def log_step(env_, action, breakdown):
        lines.append(json.dumps({
            "type": "step", "step": env_.steps,
            "p": [float(v) for v in env_.state.p],
            "q": [float(v) for v in env_.state.q],
            "v": [float(v) for v in env_.state.v],
            "omega": [float(v) for v in env_.state.omega],
            "beta": env_.mount.beta, "gamma": env_.mount.gamma,
            "action": [float(v) for v in action.as_vector()],
            "reward": {"progress": breakdown.progress,
                       "smoothness": breakdown.smoothness,
                       "discovery": breakdown.discovery,
                       "proximity": breakdown.proximity,
                       "total": breakdown.total}}, sort_keys=True))

    record = envmod.run_episode(env, policy, args.seed,
                                step_callback=log_step)
    summary = {"type": "summary", "outcome": record.outcome,
               "steps": record.steps, "exploration": record.exploration,
               "reward_sum": record.reward_sum,
               "progress_sum": record.progress_sum,
               "smoothness_sum": record.smoothness_sum,
               "discovery_sum": record.discovery_sum,
               "proximity_sum": record.proximity_sum,
               "terminal_shaping": record.terminal_shaping,
               "path_length": record.path_length, "seed": record.seed}
    lines.append(json.dumps(summary, sort_keys=True))

    (out / "trajectory.jsonl").write_text("\n".join(lines) + "\n")
    (out / "world.json").write_text(env.world.to_json() + "\n")
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    env.grid.save_snapshot(out / "grid.bin")
    (out / "grid_summary.json").write_text(
        json.dumps(env.grid.summary(), sort_keys=True, indent=2) + "\n")
    print(f"outcome={record.outcome} steps={record.steps} "
          f"exploration={record.exploration:.4f}")
    return EXIT_OK


def eval_table_csv(rows) -> str:
    lines = [",".join(EVAL_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in EVAL_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    cfg = _load(args)
    conditions = [int(c) for c in args.obstacles.split(",") if c != ""]
    if not conditions:
        print("at least one obstacle condition is required", file=sys.stderr)
        return EXIT_USAGE
    if args.policy not in policies.POLICIES:
        print(f"unknown policy {args.policy!r}; available: "
              f"{', '.join(sorted(policies.POLICIES))}", file=sys.stderr)
        return EXIT_USAGE
    if args.episodes < 1:
        print("--episodes must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    rows = envmod.run_batch(cfg, args.policy, conditions, args.episodes,
                            base_seed=args.seed, workers=args.workers,
                            policy_seed=args.seed)
    csv_text = eval_table_csv(rows)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(csv_text)
    print(csv_text, end="")
    return EXIT_OK


def cmd_export(args) -> int:
    log_path = Path(args.log)
    if not log_path.exists():
        print(f"log not found: {log_path}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    header = None
    steps = []
    with open(log_path) as f:
        for line in f:
            row = json.loads(line)
            if row["type"] == "header":
                header = row
            elif row["type"] == "step":
                steps.append(row)
    if header is None:
        print("log has no header line", file=sys.stderr)
        return EXIT_USAGE

    cols = ("step", "x", "y", "z", "qw", "qx", "qy", "qz", "beta", "gamma")
    lines = [",".join(cols)]
    for s in steps:
        lines.append(",".join(_fmt(v) for v in
                              (s["step"], *s["p"], *s["q"], s["beta"],
                               s["gamma"])))
    (out / "poses.csv").write_text("\n".join(lines) + "\n")

    # deterministic replay rebuilds the voxel grid for the snapshot
    cfg = cfgmod.config_from_plain_dict(header["config"])
    env = envmod.Env(cfg)
    env.reset(header["seed"])
    for s in steps:
        env.step(envmod.Action.from_vector(np.array(s["action"])))
    env.grid.save_snapshot(out / "grid.bin")
    (out / "grid_summary.json").write_text(
        json.dumps(env.grid.summary(), sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxnav",
        description="Deterministic active-camera navigation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode and log it")
    run.add_argument("--config", default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--policy", default="static")
    run.add_argument("--out", required=True)
    run.add_argument("--obstacles", dest="obstacles_single", type=int,
                     default=None, help="override obstacle count")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="batch evaluation metrics table")
    ev.add_argument("--config", default=None)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--policy", default="static")
    ev.add_argument("--out", required=True, help="output CSV path")
    ev.add_argument("--obstacles", default="0,10,20,30",
                    help="comma-separated obstacle counts")
    ev.add_argument("--episodes", type=int, default=200)
    ev.add_argument("--workers", type=int, default=1)
    ev.set_defaults(func=cmd_eval)

    ex = sub.add_parser("export", help="convert a trajectory log to "
                        "plot-ready CSV plus a grid snapshot")
    ex.add_argument("--log", required=True)
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
