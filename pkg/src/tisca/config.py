"""JSON run configuration.

Schema (all keys optional except ``comparisons``)::

    {
      "source": {"builtin": "dgp1-linear-demo"} | {"command": ["path", "arg", ...]},
      "comparisons": [{"name": str, "metric_proposed": str,
                       "metric_benchmark": str, "mde": number,
                       "alternative": "two_sided" | "less" | "greater"}],
      "alpha": 0.05, "target_power": 0.80, "batch_size": 50,
      "initial_count": <batch_size>, "correction": "none",
      "max_j": 100000, "parallelism": 1, "out_dir": str
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .controller import DEFAULT_MAX_J, ComparisonSpec, TiscaConfig
from .demo import BUILTIN_SOURCES
from .exceptions import ParseError, ValidationError
from .runner import InProcessSource, SimulationSource, SubprocessSource

TOP_LEVEL_KEYS = (
    "source", "comparisons", "alpha", "target_power", "batch_size",
    "initial_count", "correction", "max_j", "parallelism", "out_dir",
)
COMPARISON_KEYS = ("name", "metric_proposed", "metric_benchmark", "mde", "alternative")
_CORRECTION_NAMES = {"none": "none", "bonferroni": "bonferroni", "holm": "holm", "bh": "BH"}


@dataclass(frozen=True)
class ConfigFile:
    tisca: TiscaConfig
    source: dict | None = None
    parallelism: int = 1
    out_dir: str | None = None

    def make_source(self, **builtin_kwargs) -> SimulationSource:
        if self.source is None:
            raise ValidationError("source", "no simulation source configured")
        if "builtin" in self.source:
            return InProcessSource(BUILTIN_SOURCES[self.source["builtin"]](**builtin_kwargs))
        return SubprocessSource(self.source["command"])

    def to_dict(self) -> dict:
        """Effective configuration in the same schema the file uses."""
        t = self.tisca
        return {
            "source": self.source,
            "comparisons": [
                {k: getattr(c, k) for k in COMPARISON_KEYS} for c in t.comparisons
            ],
            "alpha": t.alpha,
            "target_power": t.target_power,
            "batch_size": t.batch_size,
            "initial_count": t.initial_count,
            "correction": _CORRECTION_NAMES[t.correction],
            "max_j": t.max_j,
            "parallelism": self.parallelism,
            "out_dir": self.out_dir,
        }


def _require(cond, field, reason):
    if not cond:
        raise ValidationError(field, reason)


def _check_source(src):
    if src is None:
        return None
    _require(isinstance(src, dict) and len(src) == 1, "source",
             "must be {'builtin': name} or {'command': [...]}")
    if "builtin" in src:
        _require(src["builtin"] in BUILTIN_SOURCES, "source",
                 f"unknown builtin {src['builtin']!r}; known: {sorted(BUILTIN_SOURCES)}")
        return {"builtin": src["builtin"]}
    _require("command" in src, "source", "must be {'builtin': name} or {'command': [...]}")
    cmd = src["command"]
    _require(isinstance(cmd, list) and cmd and all(isinstance(c, str) for c in cmd)
             and cmd[0], "source", "command must be a nonempty list of strings")
    return {"command": list(cmd)}


def _check_comparison(i, c) -> ComparisonSpec:
    field = "comparisons"
    _require(isinstance(c, dict), field, f"entry {i} must be an object")
    unknown = set(c) - set(COMPARISON_KEYS)
    _require(not unknown, field, f"entry {i} has unknown keys {sorted(unknown)}")
    missing = {"name", "metric_proposed", "metric_benchmark", "mde"} - set(c)
    _require(not missing, field, f"entry {i} is missing {sorted(missing)}")
    for k in ("name", "metric_proposed", "metric_benchmark"):
        _require(isinstance(c[k], str) and c[k], field, f"entry {i}: {k} must be a nonempty string")
    _require(isinstance(c["mde"], (int, float)) and not isinstance(c["mde"], bool),
             field, f"entry {i}: mde must be a number")
    return ComparisonSpec(c["name"], c["metric_proposed"], c["metric_benchmark"],
                          float(c["mde"]), c.get("alternative", "two_sided"))


def config_from_dict(doc: dict) -> ConfigFile:
    """Validate a decoded config document and fill in defaults."""
    _require(isinstance(doc, dict), "config", "top level must be a JSON object")
    unknown = set(doc) - set(TOP_LEVEL_KEYS)
    _require(not unknown, sorted(unknown)[0] if unknown else "config",
             f"unknown keys {sorted(unknown)}")
    _require("comparisons" in doc, "comparisons", "required")
    comps = doc["comparisons"]
    _require(isinstance(comps, list) and comps, "comparisons", "must be a nonempty list")
    specs = tuple(_check_comparison(i, c) for i, c in enumerate(comps))

    correction = doc.get("correction", "none")
    _require(correction in ("none", "bonferroni", "holm", "BH", "bh"), "correction",
             "must be one of 'none', 'bonferroni', 'holm', 'BH'")
    parallelism = doc.get("parallelism", 1)
    _require(isinstance(parallelism, int) and not isinstance(parallelism, bool)
             and parallelism >= 1, "parallelism", "must be a positive integer")
    out_dir = doc.get("out_dir")
    _require(out_dir is None or isinstance(out_dir, str), "out_dir", "must be a string")

    tisca = TiscaConfig(
        comparisons=specs,
        alpha=doc.get("alpha", 0.05),
        target_power=doc.get("target_power", 0.80),
        batch_size=doc.get("batch_size", 50),
        initial_count=doc.get("initial_count"),
        correction=correction,
        max_j=doc.get("max_j", DEFAULT_MAX_J),
    )
    return ConfigFile(tisca, _check_source(doc.get("source")), parallelism, out_dir)


def parse_config(path) -> ConfigFile:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return config_from_dict(doc)
