"""Seeded samplers used by every verification suite.

All randomness flows through a named generator (PCG64) so that reports can
state the algorithm and replays are portable: identical (seed, n) always
yields the identical sample stream.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "pcg64"

# Scaled-sphere samples keep norms O(1) so absolute tolerances stay meaningful.
SCALE_LO = 0.5
SCALE_HI = 2.0


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform direction on the Euclidean unit sphere."""
    while True:
        g = rng.standard_normal(dim)
        n = float(np.linalg.norm(g))
        if n > 1e-12:
            return g / n


def sample_scaled(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Sphere direction scaled by a uniform factor in [SCALE_LO, SCALE_HI]."""
    return sample_direction(rng, dim) * rng.uniform(SCALE_LO, SCALE_HI)


def sample_scalar(rng: np.random.Generator) -> float:
    """Signed scalar with magnitude in [SCALE_LO, SCALE_HI]."""
    s = rng.uniform(SCALE_LO, SCALE_HI)
    return float(s if rng.uniform() < 0.5 else -s)


def sample_element(rng: np.random.Generator, m, max_support: int = 5, max_block: int = 5):
    """Random nonzero element of a model: a scaled sphere point for flat models,
    a finitely supported element (support size <= max_support) for sum spaces."""
    from .norms import FiniteSupportElement, SumSpace

    if not isinstance(m, SumSpace):
        return sample_scaled(rng, m.dim)
    size = int(rng.integers(1, max_support + 1))
    entries = {}
    guard = 0
    while len(entries) < size and guard < 100 * size:
        guard += 1
        s = int(rng.integers(0, len(m.streams)))
        stream = m.streams[s]
        hi = max_block if stream.length is None else min(max_block, stream.length)
        i = int(rng.integers(0, hi))
        if (s, i) in entries:
            continue
        entries[(s, i)] = sample_scaled(rng, stream.component.dim)
    return FiniteSupportElement(entries)
