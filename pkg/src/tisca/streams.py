"""Synthetic metric streams with known means and spreads.

Useful for checking the controller itself: with the true mean difference
set equal to a comparison's MDE, the final test should reject with roughly
the target power.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np


class GaussianStreams:
    """Seeded source emitting independent normal draws, one per metric.

    Parameters
    ----------
    means, sds : mapping of metric name to float
        Must have the same keys. Metric order follows ``means``.
    base_seed : int
        Distinguishes independent repetitions that reuse seeds ``1..J``.
    """

    def __init__(self, means: Mapping[str, float], sds: Mapping[str, float],
                 base_seed: int = 0):
        if set(means) != set(sds):
            raise ValueError("means and sds must name the same metrics")
        if any(s < 0 for s in sds.values()):
            raise ValueError("sds must be nonnegative")
        self.names = tuple(means)
        self.means = np.array([means[n] for n in self.names], dtype=float)
        self.sds = np.array([sds[n] for n in self.names], dtype=float)
        self.base_seed = int(base_seed)

    def __call__(self, seed: int) -> dict[str, float]:
        rng = np.random.default_rng([self.base_seed, int(seed)])
        draws = self.means + self.sds * rng.standard_normal(len(self.names))
        return dict(zip(self.names, draws.tolist()))

    def __repr__(self):
        return f"GaussianStreams(names={self.names}, base_seed={self.base_seed})"
