"""Batch experiment runner: seeds, training loop, metric persistence.

Layout of one run under the output root::

    <root>/<name>/seed_<k>/eval.csv      step, beta_star, score, mean_1..mean_H
    <root>/<name>/seed_<k>/bias.csv      step, bias_mean, bias_std
    <root>/<name>/seed_<k>/metrics.csv   step, metric, value, seed
    <root>/<name>/seed_<k>/timing.csv    step, seed, wall_time
    <root>/<name>/seed_<k>/manifest.json
    <root>/<name>/seed_<k>/final.npz     agent checkpoint
    <root>/<name>/aggregate.csv          step, metric, mean, std, n_seeds
    <root>/<name>/config.ini             the resolved configuration

Every CSV row is flushed as soon as it is written, so a killed run leaves
files whose complete lines all parse. Wall-clock time lives only in
``timing.csv``; every other file is a pure function of (config, seed).

The chain MDP dispatches to the tabular study, which writes one CSV per
agent with the tabular schema plus the same aggregate file.
"""
from __future__ import annotations

import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from raclab import __version__
from raclab.agents import RacAgent, save_agent
from raclab.envs import ChainMDP, make_env
from raclab.errors import DivergenceError
from raclab.evaluation import beta_grid, estimate_bias, evaluate, subset_grid
from raclab.rng import make_streams
from raclab.runner.config import dump_config
from raclab.tabular import CSV_COLUMNS as TABULAR_COLUMNS
from raclab.tabular import AgentSpec, run_tabular_seed

OUT_ENV = "RACLAB_OUT"
SCHEMA_VERSION = 1
BIAS_COLUMNS = ("step", "bias_mean", "bias_std")
METRIC_COLUMNS = ("step", "metric", "value", "seed")
TIMING_COLUMNS = ("step", "seed", "wall_time")
AGGREGATE_COLUMNS = ("step", "metric", "mean", "std", "n_seeds")
EXIT_OK = 0
EXIT_DIVERGED = 3


def eval_columns(h):
    return ("step", "beta_star", "score", *(f"mean_{i}" for i in range(1, h + 1)))


def output_root(cli_value=None, config_value="runs"):
    """CLI flag first, then the ``RACLAB_OUT`` environment variable, then the config."""
    if cli_value:
        return cli_value
    return os.environ.get(OUT_ENV) or config_value


def fmt(value):
    """Deterministic text for a CSV cell (shortest round-tripping float repr)."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


class CsvLog:
    """Append-only CSV writer that flushes every row."""

    def __init__(self, path, columns):
        self.path = path
        self.columns = tuple(columns)
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.columns)
        self._fh.flush()

    def write(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"{self.path}: expected {len(self.columns)} cells, got {len(row)}")
        self._writer.writerow([fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _write_json(path, obj):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _versions():
    return {"raclab": __version__, "numpy": np.__version__, "python": platform.python_version()}


def manifest(cfg, seed, status, schemas, **extra):
    out = {
        "name": cfg.run.name,
        "config_hash": cfg.hash(),
        "seed": int(seed),
        "status": status,
        "schema_version": SCHEMA_VERSION,
        "schemas": {k: list(v) for k, v in schemas.items()},
        "versions": _versions(),
    }
    out.update(extra)
    return out


def eval_betas(agent_cfg):
    """Evaluation grid for the configured variant."""
    if agent_cfg.variant == "vanilla-rac":
        return np.array([agent_cfg.vanilla_beta])
    if agent_cfg.variant == "rac-intarget":
        right = agent_cfg.u2_right if agent_cfg.eval_right is None else agent_cfg.eval_right
        return subset_grid(agent_cfg.u2_left, right, agent_cfg.eval_count)
    right = agent_cfg.u2_right if agent_cfg.eval_right is None else agent_cfg.eval_right
    return beta_grid(right, agent_cfg.eval_count)


# ------------------------------------------------------------------ deep runs

def run_seed(cfg, seed, seed_dir):
    """Train one seed of a deep agent. Returns the exit status."""
    os.makedirs(seed_dir, exist_ok=True)
    run = cfg.run
    streams = make_streams(seed, ("env", "eval", "mc"))
    env_kwargs = {"spec": cfg.env}
    env = make_env(run.env, streams["env"], **env_kwargs)
    eval_env = make_env(run.env, np.random.default_rng(0), **env_kwargs)
    agent = RacAgent(cfg.agent, env.obs_dim, env.act_dim, seed)
    betas = eval_betas(cfg.agent)
    schemas = {"eval": eval_columns(len(betas)), "bias": BIAS_COLUMNS,
               "metrics": METRIC_COLUMNS, "timing": TIMING_COLUMNS}
    _write_json(os.path.join(seed_dir, "manifest.json"), manifest(cfg, seed, "running", schemas))
    logs = {name: CsvLog(os.path.join(seed_dir, f"{name}.csv"), cols) for name, cols in schemas.items()}
    start = time.perf_counter()
    beta_star = float(betas[0])
    info = None
    status = "complete"
    try:
        obs = env.reset()
        for t in range(1, run.steps + 1):
            action = agent.act(obs)
            step = env.step(action)
            agent.observe(obs, action, step.reward, step.obs, step.terminal)
            obs = env.reset() if step.done else step.obs
            if agent.ready:
                info = agent.train_step()
            if t % run.eval_every == 0:
                ev = evaluate(agent, eval_env, betas, run.eval_episodes, streams["eval"], run.eval_max_steps)
                beta_star = ev.beta_star
                logs["eval"].write(t, ev.beta_star, ev.score, *ev.means)
                logs["metrics"].write(t, "score", ev.score, seed)
                logs["metrics"].write(t, "beta_star", ev.beta_star, seed)
                if info is not None:
                    for key, value in asdict(info).items():
                        logs["metrics"].write(t, key, value, seed)
                logs["timing"].write(t, seed, round(time.perf_counter() - start, 3))
            if run.bias_every and t % run.bias_every == 0:
                rep = estimate_bias(agent, eval_env, beta_star, cfg.agent.gamma, streams["mc"], run.bias_pairs,
                                    run.bias_targets, run.bias_rollouts, run.bias_max_steps)
                logs["bias"].write(t, rep.mean, rep.std)
                logs["metrics"].write(t, "bias_mean", rep.mean, seed)
                logs["metrics"].write(t, "bias_std", rep.std, seed)
    except DivergenceError as exc:
        status = "diverged"
        dump = {f"state_{k}": np.asarray(v) for k, v in (exc.state or {}).items()}
        np.savez(os.path.join(seed_dir, "divergence.npz"), **dump)
        save_agent(os.path.join(seed_dir, "diverged.npz"), agent, {"env": run.env, "env_spec": asdict(cfg.env),
                                                                     "error": str(exc)})
        print(f"seed {seed}: diverged at step {agent.t}: {exc}", file=sys.stderr)
    finally:
        for log in logs.values():
            log.close()
    if status == "complete":
        save_agent(os.path.join(seed_dir, "final.npz"), agent,
                   {"env": run.env, "env_spec": asdict(cfg.env), "beta_star": beta_star})
    _write_json(os.path.join(seed_dir, "manifest.json"),
                manifest(cfg, seed, status, schemas, steps_done=int(agent.t)))
    return EXIT_OK if status == "complete" else EXIT_DIVERGED


# ------------------------------------------------------------------ aggregation

def read_long_metrics(path):
    """``{(metric, step): value}`` from a ``metrics.csv``."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[(row["metric"], int(row["step"]))] = float(row["value"])
    return out


def aggregate(records, path):
    """Write per-(step, metric) mean and population std across seeds.

    ``records`` is a list (one per seed) of ``{(metric, step): value}``.
    """
    keys = sorted({k for rec in records for k in rec}, key=lambda k: (k[1], k[0]))
    with CsvLog(path, AGGREGATE_COLUMNS) as log:
        for metric, step in keys:
            vals = np.array([rec[(metric, step)] for rec in records if (metric, step) in rec])
            finite = vals[np.isfinite(vals)]
            mean = float(finite.mean()) if len(finite) else float("nan")
            std = float(finite.std()) if len(finite) else float("nan")
            log.write(step, metric, mean, std, len(finite))


def _seed_job(args):
    cfg, seed, seed_dir = args
    return run_seed(cfg, seed, seed_dir)


def run_experiment(cfg, out_root=None, seeds=None, workers=1):
    """Run every seed of ``cfg`` and aggregate. Returns the worst exit status."""
    if cfg.run.env == ChainMDP.name:
        return run_tabular_study(cfg, out_root, seeds=seeds)
    root = os.path.join(output_root(out_root, cfg.run.out_dir), cfg.run.name)
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    seed_list = list(cfg.run.seeds if seeds is None else seeds)
    jobs = [(cfg, s, os.path.join(root, f"seed_{s}")) for s in seed_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_seed_job, jobs))
    else:
        codes = [_seed_job(j) for j in jobs]
    records = [read_long_metrics(os.path.join(d, "metrics.csv")) for _, _, d in jobs]
    aggregate(records, os.path.join(root, "aggregate.csv"))
    return max(codes)


# ------------------------------------------------------------------ tabular study

def run_tabular_study(cfg, out_root=None, agents=None, seeds=None, steps=None):
    """Chain-MDP study: one CSV per agent plus an aggregate across seeds.

    Returns the exit status (always 0; tabular updates cannot diverge).
    """
    tab = cfg.tabular
    agents = tab.agents if agents is None else agents
    steps = tab.steps if steps is None else steps
    seed_list = list(cfg.run.seeds if seeds is None else seeds)
    root = os.path.join(output_root(out_root, cfg.run.out_dir), cfg.run.name)
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    records = []
    for text in agents:
        spec = AgentSpec.parse(text)
        per_agent = {}
        with CsvLog(os.path.join(root, f"{spec.label}.csv"), TABULAR_COLUMNS) as log:
            for seed in seed_list:
                metrics = run_tabular_seed(spec, steps, seed, tab.settings)
                for row in metrics.rows():
                    log.write(*row)
                    step = row[0]
                    for name, value in zip(TABULAR_COLUMNS[2:], row[2:]):
                        per_agent.setdefault(seed, {})[(f"{spec.label}/{name}", step)] = value
        records.extend(per_agent.values())
    # agents are folded into the metric name so that one aggregate covers the study
    aggregate(records, os.path.join(root, "aggregate.csv"))
    _write_json(os.path.join(root, "manifest.json"), {
        "name": cfg.run.name, "config_hash": cfg.hash(), "seeds": seed_list, "steps": steps,
        "agents": [AgentSpec.parse(a).label for a in agents], "schema_version": SCHEMA_VERSION,
        "schemas": {"agent": list(TABULAR_COLUMNS), "aggregate": list(AGGREGATE_COLUMNS)},
        "versions": _versions(), "status": "complete",
    })
    return EXIT_OK
