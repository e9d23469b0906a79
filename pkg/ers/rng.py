"""
Splittable seeded random streams.

Every stream is addressed by ``(seed, stream_id, branch)`` and each consumer
inside a trial asks for a generator under its own purpose key, so the draws a
trial makes never depend on which worker runs it or in which order trials
are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

# Purpose keys for the sub-generators used inside one trial.
GRID = 0
SELECT = 1
ACCEPT = 2

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    Two streams with the same ``(seed, stream_id, branch)`` replay the same
    draws bit for bit; distinct addresses give independent sequences.
    A stream is single-owner: hand each concurrent consumer its own.
    """

    seed: int
    stream_id: int = 0
    branch: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    @property
    def index(self) -> int:
        """Last component of the stream address (the trial index for derived streams)."""
        return self.branch[-1] if self.branch else self.stream_id

    def child(self, index: int) -> RngStream:
        """Derive the stream for a sub-task, e.g. trial ``index`` of a sampling loop."""
        return RngStream(self.seed, self.stream_id, self.branch + (int(index),))

    def generator(self, *purpose: int) -> np.random.Generator:
        """Return a fresh generator for the given purpose key."""
        sequence = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(self.stream_id, *self.branch, *purpose),
        )
        return np.random.Generator(np.random.PCG64(sequence))

    def uniform(self, *purpose: int) -> float:
        """One uniform draw on (0, 1] for the given purpose key."""
        return 1.0 - float(self.generator(*purpose).random())
