"""Run configuration: an INI document with ``[run]``, ``[agent]``, ``[env]``
and ``[tabular]`` sections.

Every key has a default, so an empty file is a valid configuration. Unknown
sections or keys are rejected. :func:`dump_config` writes every field, and
loading that output reproduces the same :class:`RunConfig`.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import typing
from dataclasses import dataclass, field

from raclab.agents.config import AgentConfig
from raclab.envs import ENVIRONMENTS, ContinuousToySpec
from raclab.errors import ConfigError
from raclab.tabular import AgentSpec, TabularConfig

DEFAULT_TABULAR_AGENTS = ("lb", "qb0.5", "qb1", "qb2", "rac")
DEFAULT_TABULAR_STEPS = 15_000


@dataclass
class RunSection:
    name: str = "experiment"
    env: str = "point-mass"
    steps: int = 100_000
    seeds: tuple = tuple(range(8))
    eval_every: int = 1000
    eval_episodes: int = 10
    eval_max_steps: int = 1000
    bias_every: int = 5000
    bias_pairs: int = 100
    bias_targets: int = 20
    bias_rollouts: int = 20
    bias_max_steps: int = 1500
    out_dir: str = "runs"

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.env not in ENVIRONMENTS:
            raise ConfigError(f"unknown env {self.env!r}; choose from {sorted(ENVIRONMENTS)}")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ConfigError("eval_every and eval_episodes must be >= 1")
        if self.bias_every < 0:
            raise ConfigError("bias_every must be >= 0 (0 disables bias estimation)")
        if not 2 <= self.bias_targets <= self.bias_pairs:
            raise ConfigError("need 2 <= bias_targets <= bias_pairs")
        if self.bias_rollouts < 1 or self.bias_max_steps < 1:
            raise ConfigError("bias_rollouts and bias_max_steps must be >= 1")


@dataclass
class TabularSection:
    agents: tuple = DEFAULT_TABULAR_AGENTS
    steps: int = DEFAULT_TABULAR_STEPS
    settings: TabularConfig = field(default_factory=TabularConfig)

    def __post_init__(self):
        self.agents = tuple(self.agents)
        self.steps = int(self.steps)
        if self.steps < 1:
            raise ConfigError("tabular steps must be >= 1")
        for a in self.agents:
            AgentSpec.parse(a)


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    agent: AgentConfig = field(default_factory=AgentConfig)
    env: ContinuousToySpec = field(default_factory=ContinuousToySpec)
    tabular: TabularSection = field(default_factory=TabularSection)

    def hash(self):
        return hashlib.sha256(dump_config(self).encode()).hexdigest()[:16]


# ------------------------------------------------------------------ parsing

def _field_types(cls):
    hints = typing.get_type_hints(cls)
    return {f.name: (hints[f.name], f) for f in dataclasses.fields(cls)}


def _parse_value(text, hint, default, key):
    text = text.strip()
    optional = type(None) in typing.get_args(hint)
    if optional and text.lower() in ("", "none"):
        return None
    base = default if default is not None else 0.0
    try:
        if isinstance(base, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if isinstance(base, int):
            number = float(text)
            if number != int(number):
                raise ValueError(text)
            return int(number)
        if isinstance(base, float):
            return float(text)
        if isinstance(base, tuple):
            items = [t.strip() for t in text.split(",") if t.strip()]
            if base and isinstance(base[0], int):
                return tuple(int(t) for t in items)
            return tuple(items)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {text!r}") from None


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _build(cls, items, section):
    types = _field_types(cls)
    kwargs = {}
    for key, text in items:
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        hint, f = types[key]
        kwargs[key] = _parse_value(text, hint, _default_of(f), f"{section}.{key}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _default_of(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def parse_config(text):
    """Parse INI ``text`` into a validated :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    known = {"run", "agent", "env", "tabular"}
    for name in parser.sections():
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")
    section = lambda name: list(parser.items(name)) if parser.has_section(name) else []
    run = _build(RunSection, section("run"), "run")
    agent = _build(AgentConfig, section("agent"), "agent")
    env = _build(ContinuousToySpec, section("env"), "env")
    tab_items = section("tabular")
    own = {k: v for k, v in tab_items if k in ("agents", "steps")}
    settings = _build(TabularConfig, [(k, v) for k, v in tab_items if k not in own], "tabular")
    agents = own.get("agents")
    tabular = TabularSection(
        tuple(a.strip() for a in agents.split(",") if a.strip()) if agents else DEFAULT_TABULAR_AGENTS,
        _parse_value(own.get("steps", str(DEFAULT_TABULAR_STEPS)), int, DEFAULT_TABULAR_STEPS, "tabular.steps"),
        settings,
    )
    return RunConfig(run, agent, env, tabular)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(text)


def dump_config(cfg):
    """Serialize every field of ``cfg``; the inverse of :func:`parse_config`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser["run"] = {f.name: _format_value(getattr(cfg.run, f.name)) for f in dataclasses.fields(RunSection)}
    parser["agent"] = {f.name: _format_value(getattr(cfg.agent, f.name)) for f in dataclasses.fields(AgentConfig)}
    parser["env"] = {f.name: _format_value(getattr(cfg.env, f.name)) for f in dataclasses.fields(ContinuousToySpec)}
    tab = {"agents": _format_value(cfg.tabular.agents), "steps": _format_value(cfg.tabular.steps)}
    tab.update({f.name: _format_value(getattr(cfg.tabular.settings, f.name))
                for f in dataclasses.fields(TabularConfig)})
    parser["tabular"] = tab
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
