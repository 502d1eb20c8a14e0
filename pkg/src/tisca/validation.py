"""Nested Monte Carlo check of the stopping rule's realised power.

Each repetition runs the full controller on synthetic Gaussian streams whose
true mean differences are set per comparison, then records whether the final
(adjusted) test rejects at ``alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .controller import ComparisonSpec, TiscaConfig, run_tisca
from .streams import GaussianStreams


@dataclass(frozen=True)
class ValidationResult:
    names: tuple[str, ...]
    reps: int
    rejection_rate: np.ndarray  # per comparison
    j_final: np.ndarray  # per repetition
    null: bool

    def as_rows(self) -> list[dict]:
        return [{"comparison": n, "rejection_rate": float(r)}
                for n, r in zip(self.names, self.rejection_rate)]


def synthetic_config(config: TiscaConfig) -> TiscaConfig:
    """Same settings, but each comparison reads its own pair of streams."""
    comps = tuple(
        ComparisonSpec(c.name, f"{c.name}__proposed", f"{c.name}__benchmark",
                       c.mde, c.alternative)
        for c in config.comparisons
    )
    return replace(config, comparisons=comps)


def validate_power(config: TiscaConfig, reps: int = 500, sd: float = 1.0,
                   base_seed: int = 0, null: bool = False) -> ValidationResult:
    """Fraction of full runs whose final test rejects, per comparison.

    With ``null=False`` the true difference of every comparison equals its
    MDE, so the rate should be close to ``target_power``. With ``null=True``
    the streams have equal means and the rate estimates the type I error.
    """
    cfg = synthetic_config(config)
    means, sds = {}, {}
    for c in cfg.comparisons:
        means[c.metric_proposed] = 0.0 if null else c.mde
        means[c.metric_benchmark] = 0.0
        sds[c.metric_proposed] = sd
        sds[c.metric_benchmark] = sd

    rejections = np.zeros((reps, len(cfg.comparisons)), dtype=bool)
    j_final = np.zeros(reps, dtype=int)
    for r in range(reps):
        report = run_tisca(cfg, GaussianStreams(means, sds, base_seed=base_seed + r))
        j_final[r] = report.j_final
        rejections[r] = [res.adjusted_p <= cfg.alpha for res in report.final.results]
    return ValidationResult(
        names=tuple(c.name for c in cfg.comparisons),
        reps=reps,
        rejection_rate=rejections.mean(axis=0),
        j_final=j_final,
        null=null,
    )
