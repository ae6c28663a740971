"""Static SVG learning curves from metric CSVs.

Three CSV layouts are recognised by their header:

long
    ``step, metric, value, seed`` (the runner's ``metrics.csv``)
wide
    ``step, seed, <metric>...`` (tabular study files) or ``step, <metric>...``
    without a seed column (the runner's ``eval.csv`` and ``bias.csv``)
aggregate
    ``step, metric, mean, std, n_seeds``

Each file contributes one labelled series per metric. For ``seed_<k>``
directories the label is the run directory name; otherwise it is the file
stem (``rac.csv`` gives ``rac``). Series sharing a label are pooled across
seeds, and every metric becomes one SVG with a mean line and a shaded
band of one standard deviation for each label.
"""
from __future__ import annotations

import csv
import glob
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from raclab.errors import MetricsParseError

LONG = ("step", "metric", "value", "seed")
AGGREGATE = ("step", "metric", "mean", "std", "n_seeds")


@dataclass
class Series:
    """Per-step mean and std of one (label, metric) pair."""

    label: str
    metric: str
    steps: np.ndarray
    mean: np.ndarray
    std: np.ndarray


@dataclass
class PlotResult:
    metric: str
    path: str
    xlim: tuple
    ylim: tuple
    labels: list = field(default_factory=list)


def series_label(path):
    parent = os.path.basename(os.path.dirname(os.path.abspath(path)))
    if re.fullmatch(r"seed_\d+", parent):
        return os.path.basename(os.path.dirname(os.path.dirname(os.path.abspath(path))))
    return os.path.splitext(os.path.basename(path))[0]


def _number(text, path, line):
    try:
        return float(text)
    except ValueError:
        raise MetricsParseError(f"{path}:{line}: non-numeric cell {text!r}") from None


def read_metrics_csv(path):
    """Parse one CSV into ``{metric: {seed: [(step, value)]}}``, or aggregate rows.

    Returns ``(kind, data)`` where ``kind`` is ``"samples"`` or ``"aggregate"``.
    Raises :class:`MetricsParseError` on any malformed content.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MetricsParseError(f"{path}: cannot read ({exc})") from None
    if not rows or not rows[0]:
        raise MetricsParseError(f"{path}: empty file or missing header")
    header = tuple(c.strip() for c in rows[0])
    if header[0] != "step" or len(set(header)) != len(header):
        raise MetricsParseError(f"{path}: header must start with 'step' and have unique names, got {header}")
    body = rows[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise MetricsParseError(f"{path}:{i}: expected {len(header)} cells, got {len(row)}")
    if header == AGGREGATE:
        data = {}
        for i, row in enumerate(body, start=2):
            step, mean, std = (_number(row[j], path, i) for j in (0, 2, 3))
            data.setdefault(row[1], []).append((step, mean, std))
        return "aggregate", data
    data = {}
    if header == LONG:
        for i, row in enumerate(body, start=2):
            step, value, seed = _number(row[0], path, i), _number(row[2], path, i), _number(row[3], path, i)
            data.setdefault(row[1], {}).setdefault(seed, []).append((step, value))
        return "samples", data
    if "metric" in header or "value" in header:
        raise MetricsParseError(f"{path}: unrecognised header {header}")
    seed_col = header.index("seed") if "seed" in header else None
    metrics = [(j, name) for j, name in enumerate(header) if j != 0 and j != seed_col]
    if not metrics:
        raise MetricsParseError(f"{path}: no metric columns in header {header}")
    for i, row in enumerate(body, start=2):
        step = _number(row[0], path, i)
        seed = _number(row[seed_col], path, i) if seed_col is not None else 0.0
        for j, name in metrics:
            data.setdefault(name, {}).setdefault(seed, []).append((step, _number(row[j], path, i)))
    return "samples", data


def collect_series(paths):
    """Pool every file's samples by (label, metric) and reduce across seeds."""
    pooled, ready = {}, []
    for path in paths:
        label = series_label(path)
        kind, data = read_metrics_csv(path)
        if kind == "aggregate":
            for metric, rows in data.items():
                arr = np.array(sorted(rows), dtype=np.float64)
                ready.append(Series(label, metric, arr[:, 0], arr[:, 1], arr[:, 2]))
            continue
        for metric, per_seed in data.items():
            bucket = pooled.setdefault((label, metric), {})
            for seed, rows in per_seed.items():
                bucket[(path, seed)] = rows
    out = list(ready)
    for (label, metric), per_seed in pooled.items():
        by_step = {}
        for rows in per_seed.values():
            for step, value in rows:
                by_step.setdefault(step, []).append(value)
        steps = np.array(sorted(by_step), dtype=np.float64)
        mean, std = [], []
        for s in steps:
            vals = np.array(by_step[s])
            vals = vals[np.isfinite(vals)]
            mean.append(vals.mean() if len(vals) else math.nan)
            std.append(vals.std() if len(vals) else math.nan)
        out.append(Series(label, metric, steps, np.array(mean), np.array(std)))
    return out


def _limits(values):
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    if not len(values):
        return (0.0, 1.0)
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        # matplotlib refuses a zero-width range; widen symmetrically
        pad = max(abs(lo) * 0.05, 0.5)
        return (lo - pad, hi + pad)
    return (lo, hi)


def _safe_name(metric):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", metric)


def plot(patterns, out_dir):
    """Render one SVG per metric from the CSVs matching ``patterns``.

    ``patterns`` is a glob string or a list of globs/paths. The x range is
    exactly [min step, max step] and the y range exactly covers every
    mean - std and mean + std. Returns a list of :class:`PlotResult`.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(patterns, str):
        patterns = [patterns]
    paths = sorted({p for pat in patterns for p in (glob.glob(pat) or ([pat] if os.path.exists(pat) else []))})
    if not paths:
        raise MetricsParseError(f"no CSV files match {list(patterns)}")
    series = collect_series(paths)
    os.makedirs(out_dir, exist_ok=True)
    results = []
    for metric in sorted({s.metric for s in series}):
        group = sorted((s for s in series if s.metric == metric), key=lambda s: s.label)
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in group:
            line, = ax.plot(s.steps, s.mean, label=s.label)
            ax.fill_between(s.steps, s.mean - s.std, s.mean + s.std, color=line.get_color(), alpha=0.25, linewidth=0)
        xlim = _limits(np.concatenate([s.steps for s in group]))
        ylim = _limits(np.concatenate([np.concatenate([s.mean - s.std, s.mean + s.std]) for s in group]))
        ax.set_xlim(*xlim)
        ax.set_ylim(*ylim)
        ax.set_xlabel("step")
        ax.set_ylabel(metric)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        path = os.path.join(out_dir, f"{_safe_name(metric)}.svg")
        fig.savefig(path, format="svg")
        plt.close(fig)
        results.append(PlotResult(metric, path, xlim, ylim, [s.label for s in group]))
    return results
