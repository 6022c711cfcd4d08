"""Reproducible random streams.

Every trial owns a generator derived from a master seed plus an integer
path (for example ``(point_index, trial_index)``) through numpy's
SeedSequence spawning.  Streams are independent of execution order and of
how trials are distributed over workers, which is what makes the Monte
Carlo harness bit-reproducible under any parallel schedule.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (master_seed, *path)."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return np.random.default_rng(seq)


class NormalPool:
    """Buffered scalar standard-normal draws from one generator.

    Per-measurement loops (sequential thresholding, SPRT) consume normals
    one at a time; drawing them in blocks keeps those loops cheap without
    changing the stream's law.
    """

    __slots__ = ("rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self._buf = rng.standard_normal(block)
        self._pos = 0

    def next(self) -> float:
        buf = self._buf
        if self._pos >= buf.shape[0]:
            self._buf = buf = self.rng.standard_normal(buf.shape[0])
            self._pos = 0
        v = buf[self._pos]
        self._pos += 1
        return float(v)
