from __future__ import annotations

# argparse: флаги CLI поверх YAML-конфига
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from asprl.errors import AspRlError, NoFeasiblePolicy
from asprl.experiment import ExperimentConfig, load_config, parse_algorithms, run_experiment, with_overrides
from asprl.reporting import format_summary
from asprl.verification import format_cases, verify


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description="ASP(RL) experiment: situations x algorithms x sessions")
    ap.add_argument("--config", help="Path to YAML config (flags below override it)")
    ap.add_argument("--situation", choices=["1", "2", "3", "custom"])
    ap.add_argument("--map-before", help="Map file before the change (custom situation)")
    ap.add_argument("--map-after", help="Map file after the change (custom situation)")
    ap.add_argument("--algorithms", help="Comma-separated subset of q,sarsa,asp_q,asp_sarsa")
    ap.add_argument("--episodes", type=int)
    ap.add_argument("--change-at", type=int)
    ap.add_argument("--sessions", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--slack", type=int)
    ap.add_argument("--max-horizon", type=int)
    ap.add_argument("--max-models", type=int)
    ap.add_argument("--step-limit", type=int)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--out", help="Per-episode metrics CSV")
    ap.add_argument("--curves", help="Learning curves CSV (mean/std across sessions)")
    ap.add_argument("--verify", action="store_true", help="Run the reduced-MDP value-iteration check and exit")
    ap.add_argument("--log-level", default="WARNING")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    situation = args.situation
    if situation is None and (args.map_before or args.map_after):
        situation = "custom"
    return with_overrides(
        cfg,
        situation=situation,
        algorithms=None if args.algorithms is None else parse_algorithms(args.algorithms),
        episodes=args.episodes,
        change_at=args.change_at,
        sessions=args.sessions,
        seed=args.seed,
        jobs=args.jobs,
        out=args.out,
        curves_out=args.curves,
        **{
            "maps.before": args.map_before,
            "maps.after": args.map_after,
            "learning.alpha": args.alpha,
            "learning.gamma": args.gamma,
            "learning.epsilon": args.epsilon,
            "asp.slack": args.slack,
            "asp.max_horizon": args.max_horizon,
            "asp.max_models": args.max_models,
            "env.step_limit": args.step_limit,
        },
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа.

    Коды выхода: 0 — успех, 2 — нет допустимой политики, 1 — любая другая ошибка.
    Вычислений здесь нет: только флаги -> конфиг -> run_experiment -> печать.
    """
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.verify:
        cases = verify(seed=args.seed or 0)
        print(format_cases(cases))
        return 0 if all(c.passed for c in cases) else 1

    try:
        cfg = config_from_args(args)
        result = run_experiment(cfg)
    except NoFeasiblePolicy as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (AspRlError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    print("RUN OK")
    print("situation:", cfg.situation)
    print("algorithms:", ",".join(cfg.algorithms))
    print("rows:", len(result.frame))
    if cfg.out:
        print("csv:", Path(cfg.out))
    print()
    print(format_summary(result.summary))

    if result.infeasible:
        for phase in (result.plan.before, result.plan.after):
            if phase.error:
                print(f"no feasible policy: {phase.error}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
