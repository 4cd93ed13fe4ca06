"""Command-line entry point: ``ganslice <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..dirac import DiracConfig, UpdateMode, oscillation_stats, simulate
from ..env import enumerate_actions
from ..nets import CheckpointError, DivergenceError
from .compare import compare
from .experiment import CHECKPOINT_NAME, ConfigError, ExperimentConfig, evaluate_checkpoint, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("ganslice")


def _parse_schedule(text: str) -> tuple[tuple[int, float], ...]:
    """``"0:1,5000:2"`` -> ((0, 1.0), (5000, 2.0)); a bare number means step 0."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        step, sep, xi = item.partition(":")
        out.append((0, float(step)) if not sep else (int(step), float(xi)))
    if not out:
        raise ValueError("empty xi schedule")
    return tuple(out)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    d = cfg.to_dict()
    d["env"] = cfg.env  # keep the document's own seed handling
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "out", None):
        d["output_dir"] = args.out
    if getattr(args, "iterations", None):
        d["iterations"] = args.iterations
        d["eval_window"] = min(d["eval_window"], args.iterations)
    if getattr(args, "wallclock", False):
        d["record_wallclock"] = True
    return ExperimentConfig.from_dict(d)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    summary = run_experiment(cfg, progress_every=args.progress)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    ckpt = Path(args.checkpoint)
    if ckpt.is_dir():
        ckpt = ckpt / CHECKPOINT_NAME
    result = evaluate_checkpoint(ckpt, cfg, args.iterations)
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    runs = [r for r in args.runs.split(",") if r.strip()]
    report = compare([r.strip() for r in runs])
    print(report.to_text(), end="")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_dirac(args) -> int:
    cfg = DiracConfig(
        _parse_schedule(args.xi_schedule), h=args.h, lam=args.lam, steps=args.steps,
        theta0=args.theta0, psi0=args.psi0, update_mode=UpdateMode(args.mode),
    )
    traj = simulate(cfg)
    if args.out:
        traj.to_csv(args.out)
    stats = oscillation_stats(traj)
    stats.update(final_theta=float(traj.theta[-1]), final_psi=float(traj.psi[-1]), h_lambda=cfg.h * cfg.lam)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_actions(args) -> int:
    actions = enumerate_actions(args.bandwidth, args.resolution, args.slices)
    if args.count:
        print(len(actions))
        return EXIT_OK
    print("index," + ",".join(f"w{i}_hz" for i in range(args.slices)))
    for a in actions:
        print(f"{a.index}," + ",".join(f"{w:.0f}" for w in a.allocation))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ganslice", description="RAN slicing simulator and GAN-based distributional RL agents")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one experiment")
    t.add_argument("--config", required=True, help="experiment JSON")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--out", help="override the output directory")
    t.add_argument("--iterations", type=int, help="override the iteration count")
    t.add_argument("--progress", type=int, default=500, help="log every N iterations (0 = quiet)")
    t.add_argument("--wallclock", action="store_true", help="record per-iteration wall time (breaks byte-identity)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="greedy rollout of a checkpoint")
    e.add_argument("--checkpoint", required=True, help="checkpoint file or run directory")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--iterations", type=int, default=None)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="rank finished runs")
    c.add_argument("--runs", required=True, help="comma-separated run directories or summary files")
    c.add_argument("--csv", help="also write the report as CSV")
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("dirac-lab", help="simulate the Dirac-WGAN-GP toy dynamics")
    d.add_argument("--h", type=float, default=0.01, help="step size")
    d.add_argument("--lambda", dest="lam", type=float, default=10.0, help="penalty coefficient")
    d.add_argument("--steps", type=int, default=1000)
    d.add_argument("--xi-schedule", default="0:1", help='target schedule, e.g. "0:1,5000:2"')
    d.add_argument("--theta0", type=float, default=0.0)
    d.add_argument("--psi0", type=float, default=0.0)
    d.add_argument("--mode", choices=[m.value for m in UpdateMode], default=UpdateMode.ALTERNATING.value)
    d.add_argument("--out", help="write the trajectory CSV here")
    d.set_defaults(func=cmd_dirac)

    a = sub.add_parser("enumerate-actions", help="list the discrete bandwidth splits")
    a.add_argument("--bandwidth", type=float, default=10e6, help="total bandwidth in Hz")
    a.add_argument("--resolution", type=float, default=1e6, help="allocation granularity in Hz")
    a.add_argument("--slices", type=int, default=3)
    a.add_argument("--count", action="store_true", help="print only the number of actions")
    a.set_defaults(func=cmd_actions)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
