"""Command-line interface: ``python -m raclab <command>``.

Commands
    run <config> [--seeds N] [--out DIR] [--workers K]
    plot <glob> --out DIR
    bias <checkpoint> --env NAME
    mdp-study [--agents lb,qb0.5,qb1,qb2,rac] [--steps T] [--seeds N] [--out DIR]

The output root resolves from ``--out``, then the ``RACLAB_OUT`` environment
variable, then the configuration's ``out_dir``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from raclab.errors import ConfigError, MetricsParseError


def _seed_list(count):
    if count is None:
        return None
    if count < 1:
        raise ConfigError("--seeds must be >= 1")
    return list(range(count))


def cmd_run(args):
    from raclab.runner.config import load_config
    from raclab.runner.run import output_root, run_experiment

    cfg = load_config(args.config)
    code = run_experiment(cfg, args.out, seeds=_seed_list(args.seeds), workers=args.workers)
    print(f"{cfg.run.name}: results under {output_root(args.out, cfg.run.out_dir)}/{cfg.run.name} (exit {code})")
    return code


def cmd_plot(args):
    from raclab.runner.plot import plot

    for res in plot(args.pattern, args.out):
        print(f"{res.metric}: {res.path} ({', '.join(res.labels)})")
    return 0


def cmd_bias(args):
    from raclab.agents import load_agent
    from raclab.envs import ContinuousToySpec, make_env
    from raclab.evaluation import estimate_bias

    agent, extra = load_agent(args.checkpoint)
    kwargs = {}
    if args.env == "point-mass":
        kwargs["spec"] = ContinuousToySpec(**extra.get("env_spec", {}))
    env = make_env(args.env, np.random.default_rng(args.seed), **kwargs)
    beta = args.beta if args.beta is not None else extra.get("beta_star")
    if beta is None:
        raise ConfigError("checkpoint records no beta_star; pass --beta")
    rep = estimate_bias(agent, env, beta, agent.cfg.gamma, np.random.default_rng(args.seed), args.pairs,
                        args.targets, args.rollouts, args.max_steps)
    out = {k: v for k, v in asdict(rep).items() if not isinstance(v, np.ndarray)}
    print(json.dumps(out, indent=2))
    return 0


def cmd_mdp_study(args):
    from raclab.runner.config import RunConfig, load_config
    from raclab.runner.run import output_root, run_tabular_study
    from raclab.tabular import AgentSpec

    cfg = load_config(args.config) if args.config else RunConfig()
    if args.config is None:
        cfg.run.name = "mdp-study"
    agents = [a for a in args.agents.split(",") if a.strip()] if args.agents else None
    code = run_tabular_study(cfg, args.out, agents=agents, seeds=_seed_list(args.seeds), steps=args.steps)
    root = f"{output_root(args.out, cfg.run.out_dir)}/{cfg.run.name}"
    print(f"results under {root}")
    from raclab.runner.plot import collect_series

    labels = [AgentSpec.parse(a).label for a in (agents or cfg.tabular.agents)]
    series = {(s.label, s.metric): s for s in collect_series([f"{root}/{lab}.csv" for lab in labels])}
    print(f"{'agent':>8} {'steps to 0.9':>13} {'final freq':>11} {'peak |bias|':>12}")
    for lab in labels:
        freq, bias = series[(lab, "optimal_visit_freq")], series[(lab, "q_bias")]
        hit = np.flatnonzero(freq.mean >= 0.9)
        reach = str(int(freq.steps[hit[0]])) if len(hit) else "never"
        print(f"{lab:>8} {reach:>13} {freq.mean[-1]:>11.3f} {np.nanmax(np.abs(bias.mean)):>12.3f}")
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="raclab", description="Realistic actor-critic laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train every seed of a configuration")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, default=None, help="number of seeds (0..N-1); default from config")
    p.add_argument("--out", default=None, help="output root")
    p.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render SVG learning curves")
    p.add_argument("pattern", help="glob of metric CSV files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bias", help="normalized Q bias of a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--env", required=True)
    p.add_argument("--beta", type=float, default=None, help="defaults to the checkpoint's beta_star")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--targets", type=int, default=20)
    p.add_argument("--rollouts", type=int, default=20)
    p.add_argument("--max-steps", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("mdp-study", help="tabular chain-MDP study")
    p.add_argument("--agents", default=None, help="comma list, e.g. lb,qb0.5,qb1,qb2,rac")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_mdp_study)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MetricsParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
