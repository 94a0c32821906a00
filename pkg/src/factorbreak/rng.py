"""Reproducible random streams built on a counter-based generator.

Every stochastic component draws from its own named Philox stream derived
from ``(seed, *path)``, so loadings, factors, noise, replications, and
critical-value simulations are mutually independent and the results do not
depend on evaluation order or worker count.
"""

from __future__ import annotations

import numpy as np

# Stream domain tags. Keep values stable: they are part of the seeding
# contract and changing them changes every simulated dataset.
LOADINGS_1 = 0
LOADINGS_2 = 1
FACTORS_1 = 2
FACTORS_2 = 3
NOISE = 4
CRITICAL_VALUES = 5
REPLICATION = 6
SEGMENTS = 7

Seed = int | tuple[int, ...]


def stream(seed: Seed, *path: int) -> np.random.Generator:
    """Return the Philox generator for stream ``(seed, *path)``.

    Philox is counter-based: streams with distinct ``path`` keys are
    statistically independent, and the mapping is pure, so any stream can
    be re-created in isolation (e.g. one replication of a parallel run).
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
