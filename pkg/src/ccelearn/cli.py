"""Command line interface: solve benchmark instances, persist random games.

Exit codes: 0 success; 2 invalid arguments or configuration; 3 the time
limit stopped the run before any accuracy target was reached.
"""

from __future__ import annotations

import argparse
import json
import sys

from .efg import TreeError
from .experiments import ExperimentConfig, emit, resume_run, run
from .games import build_game
from .serialize import SchemaError, save_game


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccelearn",
        description="Approximate coarse correlated equilibria of extensive-form games "
        "via no-regret learning (cfr, cfr-s, cfr-jr, cfr-jr-k).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a solver on a benchmark instance")
    solve.add_argument("--game", help="instance spec, e.g. K3-4, L3-3, G2-4-DA, R2-5:seed=7, "
                                      "FIG2, SHAPLEY, file:saved.json")
    solve.add_argument("--algo", choices=["cfr", "cfr-s", "cfr-jr", "cfr-jr-k"], default="cfr-jr")
    solve.add_argument("--iters", type=int, default=10000, help="iteration budget T")
    solve.add_argument("--recon-rate", type=int, default=1, metavar="K",
                       help="reconstruction rate k for cfr-jr-k")
    solve.add_argument("--seed", type=_parse_ints, default=(0,), metavar="S[,S...]",
                       help="seeds for cfr-s (one cell per seed)")
    solve.add_argument("--eval-every", type=int, default=50)
    solve.add_argument("--eval-at", type=_parse_ints, default=None, metavar="T1[,T2...]",
                       help="explicit evaluation iterations (overrides --eval-every)")
    solve.add_argument("--alpha-targets", type=_parse_floats, default=(0.05, 0.01, 0.005))
    solve.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    solve.add_argument("--out", default=None, metavar="DIR", help="directory for trace files")
    solve.add_argument("--format", choices=["csv", "json"], default="csv")
    solve.add_argument("--workers", type=int, default=1)
    solve.add_argument("--no-timing", action="store_true",
                       help="write zeroed time columns for byte-reproducible outputs")
    solve.add_argument("--config", default=None, metavar="PATH",
                       help="JSON config block; its entries override the flags")
    solve.add_argument("--resume", default=None, metavar="CHECKPOINT",
                       help="continue a single-cell run from a checkpoint file")

    gen = sub.add_parser("gen", help="construct an instance and persist it as JSON")
    gen.add_argument("--game", required=True)
    gen.add_argument("--out", required=True, metavar="PATH")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    cfg = {
        "game": args.game,
        "algo": args.algo,
        "iters": args.iters,
        "k": args.recon_rate,
        "seeds": tuple(args.seed),
        "eval_every": args.eval_every,
        "eval_at": args.eval_at,
        "alpha_targets": tuple(args.alpha_targets),
        "out_dir": args.out,
        "time_limit_s": args.time_limit,
        "fmt": args.format,
        "workers": args.workers,
        "record_time": not args.no_timing,
    }
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    if not cfg.get("game"):
        raise ValueError("--game (or a config file naming one) is required")
    return ExperimentConfig.from_dict(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            save_game(build_game(args.game), args.out)
            print(f"wrote {args.out}")
            return 0
        config = _config_from_args(args)
        config.validate()
        result = resume_run(args.resume, config) if args.resume else run(config)
        if config.out_dir:
            paths = emit(result)
            for p in paths:
                print(f"wrote {p}")
        for cell in result.cells:
            last = cell.trace[-1] if cell.trace else None
            tag = f"{cell.algo}" + (f" seed={cell.seed}" if cell.seed is not None else "")
            if last is None:
                print(f"{cell.game} {tag}: no evaluation points")
                continue
            print(
                f"{cell.game} {tag}: iter={last.iteration} eps={last.epsilon:.6g} "
                f"alpha={last.alpha:.6g} sw={last.sw:.6g} support={last.support}"
                + (" [time limit]" if cell.truncated else "")
            )
        for row in result.summary:
            if row["hits"]:
                print(
                    f"alpha<={row['alpha_target']}: hit {row['hits']}/{row['cells']} cells, "
                    f"iteration {row['mean_iteration']:.0f} +/- {row['std_iteration']:.0f}, "
                    f"time {row['mean_time_s']:.3f}s +/- {row['std_time_s']:.3f}s"
                )
            else:
                print(f"alpha<={row['alpha_target']}: never reached")
        if result.truncated and not result.any_target_hit:
            return 3
        return 0
    except (TreeError, SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
