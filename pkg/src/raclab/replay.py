"""Fixed-capacity FIFO replay buffer with uniform sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from raclab.errors import ConfigError, UsageError


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray
    done: bool


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.r)


class ReplayBuffer:
    """Ring storage; once full each push evicts the oldest transition."""

    def __init__(self, capacity, obs_shape=(), act_shape=(), obs_dtype=np.float64, act_dtype=np.float64):
        if capacity < 1:
            raise ConfigError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, *obs_shape), dtype=obs_dtype)
        self.s2 = np.zeros((self.capacity, *obs_shape), dtype=obs_dtype)
        self.a = np.zeros((self.capacity, *act_shape), dtype=act_dtype)
        self.r = np.zeros(self.capacity)
        self.done = np.zeros(self.capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, s, a, r, s2, done):
        i = self.cursor
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s2[i] = s2
        self.done[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        """Uniform sample with replacement."""
        if self.size == 0:
            raise UsageError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx])

    def contents(self):
        """Stored transitions, oldest first."""
        order = np.arange(self.size)
        if self.size == self.capacity:
            order = (order + self.cursor) % self.capacity
        return [Transition(self.s[i], self.a[i], self.r[i], self.s2[i], bool(self.done[i])) for i in order]

    def state_dict(self):
        return {"s": self.s, "a": self.a, "r": self.r, "s2": self.s2, "done": self.done,
                "cursor": self.cursor, "size": self.size}

    def load_state_dict(self, d):
        for k in ("s", "a", "r", "s2", "done"):
            getattr(self, k)[...] = d[k]
        self.cursor = int(d["cursor"])
        self.size = int(d["size"])
