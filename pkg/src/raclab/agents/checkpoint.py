"""Agent checkpoints: one ``.npz`` holding every array plus a JSON header.

The header records the format version, agent configuration, counters,
Adam step counts and the exact bit-generator state of every random stream,
so a restored agent continues bit-identically.
"""
from __future__ import annotations

import json
import os

import numpy as np

from raclab.agents.config import AgentConfig
from raclab.agents.rac import RacAgent
from raclab.errors import ConfigError

CHECKPOINT_VERSION = 1
_META_KEY = "__meta__"


def _agent_arrays(agent):
    out = {}
    for name, mod in agent.modules().items():
        for kind, arrays in mod.arrays().items():
            for i, arr in enumerate(arrays):
                out[f"{name}.{kind}.{i}"] = arr
    n = len(agent.buffer)
    for key, arr in agent.buffer.state_dict().items():
        if isinstance(arr, np.ndarray):
            out[f"buffer.{key}"] = arr[:n] if n < agent.buffer.capacity else arr
    return out


def save_agent(path, agent, extra=None):
    """Write ``agent`` (and optional JSON-serializable ``extra`` metadata) atomically."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": agent.cfg.to_dict(),
        "obs_dim": agent.obs_dim,
        "act_dim": agent.act_dim,
        "seed": agent.seed,
        "t": agent.t,
        "n_updates": agent.n_updates,
        "adam_t": {name: opt.t for name, opt in agent.optimizers().items()},
        "buffer": {"cursor": agent.buffer.cursor, "size": agent.buffer.size},
        "rng": {name: rng.bit_generator.state for name, rng in agent.rngs.items()},
        "extra": extra or {},
    }
    arrays = _agent_arrays(agent)
    arrays[_META_KEY] = np.array(json.dumps(meta))
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, path)


def read_meta(path):
    with np.load(path, allow_pickle=False) as data:
        if _META_KEY not in data:
            raise ConfigError(f"{path} is not an agent checkpoint")
        meta = json.loads(str(data[_META_KEY]))
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {meta.get('version')!r}")
    return meta


def load_agent(path):
    """Rebuild an agent from :func:`save_agent` output. Returns ``(agent, extra)``."""
    meta = read_meta(path)
    cfg = dict(meta["config"])
    agent = RacAgent(AgentConfig(**cfg), meta["obs_dim"], meta["act_dim"], meta["seed"])
    with np.load(path, allow_pickle=False) as data:
        for name, mod in agent.modules().items():
            for kind, arrays in mod.arrays().items():
                for i, arr in enumerate(arrays):
                    arr[...] = data[f"{name}.{kind}.{i}"]
        n = meta["buffer"]["size"]
        for key in ("s", "a", "r", "s2", "done"):
            getattr(agent.buffer, key)[:n] = data[f"buffer.{key}"]
    agent.buffer.cursor = meta["buffer"]["cursor"]
    agent.buffer.size = n
    for name, opt in agent.optimizers().items():
        opt.t = meta["adam_t"][name]
    for name, state in meta["rng"].items():
        agent.rngs[name].bit_generator.state = state
    agent.t, agent.n_updates = meta["t"], meta["n_updates"]
    return agent, meta["extra"]
