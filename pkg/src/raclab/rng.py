"""Named random sub-streams derived from one master seed."""
import zlib

import numpy as np

STREAMS = ("env", "init", "exploration", "minibatch", "beta", "policy", "eval", "mc")


def substream(seed, name):
    """Independent generator for ``name``; stable under reordering of callers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])))


def make_streams(seed, names=STREAMS):
    return {name: substream(seed, name) for name in names}
