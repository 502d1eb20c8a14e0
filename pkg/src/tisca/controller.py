"""Power-driven stopping for Monte Carlo model comparisons.

The controller runs simulation replicates in batches. After each batch it
compares every configured pair of metric columns with Welch's t-test, adjusts
the p-values as a family, and estimates the power each comparison has to
detect its minimum detectable effect at the current replicate count. It
stops once every comparison reaches the target power.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import InsufficientData, SchemaMismatch, ValidationError
from .multiplicity import adjust_p_values, normalize_method
from .runner import RunStore, as_source, run_batch
from .stats import ALTERNATIVES, estimate_welch_power, summarize, welch_from_summaries

logger = logging.getLogger(__name__)

DEFAULT_MAX_J = 100_000
POWER_ALPHA_MODES = ("auto", "raw")


@dataclass(frozen=True)
class ComparisonSpec:
    """One hypothesis: ``metric_proposed`` against ``metric_benchmark``.

    ``mde`` is the signed mean difference (proposed minus benchmark) that
    the study should be able to detect.
    """

    name: str
    metric_proposed: str
    metric_benchmark: str
    mde: float
    alternative: str = "two_sided"

    def __post_init__(self):
        if not self.name:
            raise ValidationError("comparisons", "comparison name must be nonempty")
        if self.metric_proposed == self.metric_benchmark:
            raise ValidationError(
                "comparisons", f"{self.name}: proposed and benchmark metric are the same"
            )
        mde = float(self.mde)
        if not math.isfinite(mde) or mde == 0.0:
            raise ValidationError("comparisons", f"{self.name}: mde must be finite and nonzero")
        object.__setattr__(self, "mde", mde)
        if self.alternative not in ALTERNATIVES:
            raise ValidationError(
                "comparisons", f"{self.name}: alternative must be one of {ALTERNATIVES}"
            )


def as_comparison(c) -> ComparisonSpec:
    if isinstance(c, ComparisonSpec):
        return c
    if isinstance(c, dict):
        return ComparisonSpec(**c)
    return ComparisonSpec(*c)


@dataclass(frozen=True)
class TiscaConfig:
    comparisons: tuple[ComparisonSpec, ...]
    alpha: float = 0.05
    target_power: float = 0.80
    batch_size: int = 50
    initial_count: int | None = None
    correction: str = "none"
    max_j: int = DEFAULT_MAX_J
    power_alpha: str = "auto"

    def __post_init__(self):
        comps = tuple(as_comparison(c) for c in self.comparisons)
        object.__setattr__(self, "comparisons", comps)
        if not comps:
            raise ValidationError("comparisons", "at least one comparison is required")
        names = [c.name for c in comps]
        if len(set(names)) != len(names):
            raise ValidationError("comparisons", "comparison names must be unique")

        for key in ("alpha", "target_power"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
                raise ValidationError(key, f"must lie strictly between 0 and 1, got {v!r}")
            object.__setattr__(self, key, float(v))

        if not _is_int(self.batch_size) or self.batch_size < 1:
            raise ValidationError("batch_size", f"must be a positive integer, got {self.batch_size!r}")
        if self.initial_count is None:
            object.__setattr__(self, "initial_count", self.batch_size)
        j0 = self.initial_count
        if not _is_int(j0) or j0 < 0 or j0 == 1:
            raise ValidationError("initial_count", f"must be 0 or >= 2, got {j0!r}")
        if j0 == 0 and self.batch_size < 2:
            raise ValidationError("batch_size", "must be >= 2 when initial_count is 0")
        if not _is_int(self.max_j) or self.max_j < self.first_checkpoint:
            raise ValidationError(
                "max_j", f"must be an integer >= {self.first_checkpoint}, got {self.max_j!r}"
            )
        try:
            object.__setattr__(self, "correction", normalize_method(self.correction))
        except ValueError as exc:
            raise ValidationError("correction", str(exc)) from None
        if self.power_alpha not in POWER_ALPHA_MODES:
            raise ValidationError("power_alpha", f"must be one of {POWER_ALPHA_MODES}")

    @property
    def first_checkpoint(self) -> int:
        return self.initial_count if self.initial_count > 0 else self.batch_size

    @property
    def metric_names(self) -> tuple[str, ...]:
        seen = {}
        for c in self.comparisons:
            seen.setdefault(c.metric_proposed, None)
            seen.setdefault(c.metric_benchmark, None)
        return tuple(seen)

    def alpha_for_power(self) -> float:
        """Significance level at which power is estimated.

        Family-wise corrections (Bonferroni, Holm) are matched by estimating
        power at ``alpha / K``; otherwise the nominal ``alpha`` is used.
        """
        if self.power_alpha == "auto" and self.correction in ("bonferroni", "holm"):
            return self.alpha / len(self.comparisons)
        return self.alpha

    def to_dict(self) -> dict:
        d = asdict(self)
        d["comparisons"] = [asdict(c) for c in self.comparisons]
        return d


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


@dataclass(frozen=True)
class ComparisonResult:
    name: str
    statistic: float
    df: float
    raw_p: float
    adjusted_p: float
    estimated_power: float
    mean_diff: float
    power_alpha: float


@dataclass(frozen=True)
class CheckpointResult:
    j: int
    results: tuple[ComparisonResult, ...]

    @property
    def min_power(self) -> float:
        return min(r.estimated_power for r in self.results)

    def __getitem__(self, name: str) -> ComparisonResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


@dataclass
class TiscaReport:
    j_final: int
    stopped_by: str
    final: CheckpointResult
    power_history: list[CheckpointResult]
    config: TiscaConfig
    store: RunStore | None = field(default=None, repr=False, compare=False)

    @property
    def p_raw(self) -> dict[str, float]:
        return {r.name: r.raw_p for r in self.final.results}

    @property
    def p_adj(self) -> dict[str, float]:
        return {r.name: r.adjusted_p for r in self.final.results}

    @property
    def statistics(self) -> dict[str, float]:
        return {r.name: r.statistic for r in self.final.results}

    @property
    def achieved_power(self) -> dict[str, float]:
        return {r.name: r.estimated_power for r in self.final.results}

    def history_rows(self) -> list[dict]:
        """One flat row per (checkpoint, comparison), ready for CSV."""
        return [
            {"j": cp.j, "comparison": r.name, "statistic": r.statistic, "df": r.df,
             "raw_p": r.raw_p, "adjusted_p": r.adjusted_p,
             "estimated_power": r.estimated_power}
            for cp in self.power_history
            for r in cp.results
        ]

    def to_dict(self) -> dict:
        return {
            "j_final": self.j_final,
            "stopped_by": self.stopped_by,
            "comparisons": [asdict(r) for r in self.final.results],
            "power_history": [
                {"j": cp.j, "results": [asdict(r) for r in cp.results]}
                for cp in self.power_history
            ],
            "config": self.config.to_dict(),
        }


def evaluate_checkpoint(store: RunStore, config: TiscaConfig) -> CheckpointResult:
    """Test every comparison on the runs accumulated so far.

    Power is 0 for a comparison whose proposed or benchmark column has zero
    spread, since no variance estimate is available yet.
    """
    j = len(store)
    if j < 2:
        raise InsufficientData(f"a checkpoint needs at least 2 runs, store has {j}")
    alpha_power = config.alpha_for_power()

    tests, powers = [], []
    for comp in config.comparisons:
        try:
            sp = summarize(store.column(comp.metric_proposed))
            sb = summarize(store.column(comp.metric_benchmark))
        except SchemaMismatch as exc:
            raise SchemaMismatch(f"comparison {comp.name!r}: {exc}") from None
        tests.append(welch_from_summaries(sp, sb, comp.alternative))
        if sp.sd > 0 and sb.sd > 0:
            powers.append(
                estimate_welch_power(sp, sb, comp.mde, alpha_power, comp.alternative).power
            )
        else:
            powers.append(0.0)

    adjusted = adjust_p_values([t.p_value for t in tests], config.correction)
    results = tuple(
        ComparisonResult(
            name=comp.name,
            statistic=t.statistic,
            df=t.df,
            raw_p=t.p_value,
            adjusted_p=float(adj),
            estimated_power=pw,
            mean_diff=t.mean_diff,
            power_alpha=alpha_power,
        )
        for comp, t, adj, pw in zip(config.comparisons, tests, adjusted, powers)
    )
    return CheckpointResult(j, results)


def run_tisca(
    config: TiscaConfig,
    source,
    parallelism: int = 1,
    on_checkpoint: Callable[[CheckpointResult], None] | None = None,
) -> TiscaReport:
    """Run batches until every comparison reaches ``config.target_power``.

    Seeds ``1..J`` are used in order. The loop also ends when one more batch
    would exceed ``config.max_j``; the report then says ``max_j_reached``.
    """
    source = as_source(source)
    store = RunStore()
    history: list[CheckpointResult] = []
    b = config.batch_size

    def checkpoint():
        cp = evaluate_checkpoint(store, config)
        history.append(cp)
        logger.info("J=%d min power %.4f", cp.j, cp.min_power)
        if on_checkpoint is not None:
            on_checkpoint(cp)
        return cp

    store.extend(run_batch(source, 1, config.first_checkpoint, parallelism))
    cp = checkpoint()
    stopped_by = "power_reached"
    while cp.min_power < config.target_power:
        if store.j + b > config.max_j:
            stopped_by = "max_j_reached"
            break
        store.extend(run_batch(source, store.j + 1, store.j + b, parallelism))
        cp = checkpoint()

    return TiscaReport(
        j_final=store.j,
        stopped_by=stopped_by,
        final=cp,
        power_history=history,
        config=config,
        store=store,
    )


class TISCA(BaseEstimator):
    """Estimator-style front end to :func:`run_tisca`.

    ``fit`` takes a simulation source (a callable ``seed -> metrics`` or a
    :class:`~tisca.runner.SimulationSource`) and sets the fitted attributes
    ``j_final_``, ``p_raw_``, ``p_adj_``, ``statistics_``, ``power_``,
    ``stopped_by_``, ``power_history_``, ``store_`` and ``report_``.

    Examples
    --------
    >>> from tisca.streams import GaussianStreams
    >>> src = GaussianStreams({"a": 0.0, "b": 1.0}, {"a": 0.01, "b": 0.01})
    >>> TISCA([("a_vs_b", "a", "b", 1.0)], batch_size=10).fit(src).j_final_
    10
    """

    def __init__(
        self,
        comparisons: Sequence = (),
        *,
        alpha: float = 0.05,
        target_power: float = 0.80,
        batch_size: int = 50,
        initial_count: int | None = None,
        correction: str = "none",
        max_j: int = DEFAULT_MAX_J,
        power_alpha: str = "auto",
        parallelism: int = 1,
    ):
        self.comparisons = comparisons
        self.alpha = alpha
        self.target_power = target_power
        self.batch_size = batch_size
        self.initial_count = initial_count
        self.correction = correction
        self.max_j = max_j
        self.power_alpha = power_alpha
        self.parallelism = parallelism

    def make_config(self) -> TiscaConfig:
        return TiscaConfig(
            comparisons=tuple(self.comparisons),
            alpha=self.alpha,
            target_power=self.target_power,
            batch_size=self.batch_size,
            initial_count=self.initial_count,
            correction=self.correction,
            max_j=self.max_j,
            power_alpha=self.power_alpha,
        )

    def fit(self, source, y=None):
        report = run_tisca(self.make_config(), source, parallelism=self.parallelism)
        self.report_ = report
        self.store_ = report.store
        self.j_final_ = report.j_final
        self.stopped_by_ = report.stopped_by
        self.p_raw_ = report.p_raw
        self.p_adj_ = report.p_adj
        self.statistics_ = report.statistics
        self.power_ = report.achieved_power
        self.power_history_ = report.power_history
        return self

    def evaluate(self, store: RunStore) -> CheckpointResult:
        """Evaluate a checkpoint on an existing run store (no simulation)."""
        return evaluate_checkpoint(store, self.make_config())

    def power_curves(self) -> dict[str, list[tuple[int, float]]]:
        check_is_fitted(self, "report_")
        curves: dict[str, list[tuple[int, float]]] = {}
        for cp in self.power_history_:
            for r in cp.results:
                curves.setdefault(r.name, []).append((cp.j, r.estimated_power))
        return curves

