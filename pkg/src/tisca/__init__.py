"""Power-driven replicate counts for Monte Carlo comparisons of models."""

from .controller import (
    TISCA,
    CheckpointResult,
    ComparisonResult,
    ComparisonSpec,
    TiscaConfig,
    TiscaReport,
    evaluate_checkpoint,
    run_tisca,
)
from .multiplicity import adjust_p_values
from .runner import (
    InProcessSource,
    MetricRecord,
    RunStore,
    SubprocessSource,
    execute_run,
    load_runs,
    persist_runs,
    run_batch,
)
from .stats import (
    PowerEstimate,
    SampleSummary,
    TestResult,
    estimate_welch_power,
    noncentral_t_cdf,
    summarize,
    welch_t_test,
)
from .streams import GaussianStreams

__all__ = [
    "TISCA", "CheckpointResult", "ComparisonResult", "ComparisonSpec", "TiscaConfig",
    "TiscaReport", "evaluate_checkpoint", "run_tisca", "adjust_p_values",
    "InProcessSource", "MetricRecord", "RunStore", "SubprocessSource", "execute_run",
    "load_runs", "persist_runs", "run_batch", "PowerEstimate", "SampleSummary",
    "TestResult", "estimate_welch_power", "noncentral_t_cdf", "summarize", "welch_t_test",
    "GaussianStreams",
]
__version__ = "0.1.0"
