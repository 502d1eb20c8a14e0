"""Seeded execution of simulation replicates and the accumulated run store.

A simulation source turns a positive integer seed into one
:class:`MetricRecord`. Two kinds are provided: :class:`InProcessSource` wraps
a Python callable, and :class:`SubprocessSource` runs an external program as
``<command> --seed N`` and reads a single JSON line from its stdout::

    {"seed": N, "metrics": {"name": value, ...}}
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    GapInSeeds,
    InvalidRange,
    NonFiniteMetric,
    RunFailed,
    SchemaMismatch,
    TiscaError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricRecord:
    seed: int
    values: Mapping[str, float] = field(default_factory=dict)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values)


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 1:
        raise InvalidRange(f"seeds are positive integers, got {seed!r}")
    return int(seed)


def _coerce_record(seed: int, out) -> MetricRecord:
    if isinstance(out, MetricRecord):
        if out.seed != seed:
            raise RunFailed(seed, f"record reports seed {out.seed}")
        values = out.values
    elif isinstance(out, Mapping):
        values = out
    else:
        raise RunFailed(seed, f"expected a MetricRecord or mapping, got {type(out).__name__}")

    clean = {}
    for name, v in values.items():
        if not isinstance(name, str):
            raise RunFailed(seed, f"metric name {name!r} is not a string")
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            raise RunFailed(seed, f"metric {name!r} is not a number: {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteMetric(seed, name, v)
        clean[name] = v
    if not clean:
        raise RunFailed(seed, "run produced no metrics")
    return MetricRecord(seed, clean)


class SimulationSource:
    """Something that can execute one replicate for a given seed."""

    def run(self, seed: int) -> MetricRecord:
        raise NotImplementedError


class InProcessSource(SimulationSource):
    """Wrap ``func(seed) -> MetricRecord | Mapping[str, float]``.

    The callable must derive all of its randomness from ``seed``.
    """

    def __init__(self, func: Callable[[int], object]):
        if not callable(func):
            raise TypeError("func must be callable")
        self.func = func

    def run(self, seed: int) -> MetricRecord:
        try:
            out = self.func(seed)
        except TiscaError as exc:
            if isinstance(exc, RunFailed):
                raise
            raise RunFailed(seed, exc) from exc
        except Exception as exc:
            raise RunFailed(seed, f"{type(exc).__name__}: {exc}") from exc
        return _coerce_record(seed, out)

    def __repr__(self):
        name = getattr(self.func, "__qualname__", repr(self.func))
        return f"InProcessSource({name})"


class SubprocessSource(SimulationSource):
    """Run ``command + ["--seed", str(seed)]`` and parse one JSON line."""

    def __init__(self, command: Sequence[str], timeout: float | None = None,
                 env: Mapping[str, str] | None = None):
        command = [str(c) for c in command]
        if not command or not command[0]:
            raise ValueError("subprocess command must be nonempty")
        self.command = command
        self.timeout = timeout
        self.env = dict(env) if env is not None else None

    def run(self, seed: int) -> MetricRecord:
        argv = [*self.command, "--seed", str(seed)]
        env = None if self.env is None else {**os.environ, **self.env}
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=self.timeout, env=env)
        except (OSError, subprocess.SubprocessError) as exc:
            raise RunFailed(seed, f"could not execute {argv[0]!r}: {exc}") from exc

        for line in proc.stderr.splitlines():
            logger.info("[seed %d] %s", seed, line)
        if proc.returncode != 0:
            raise RunFailed(seed, f"exit code {proc.returncode}")

        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != 1:
            raise RunFailed(seed, f"expected exactly one output line, got {len(lines)}")
        try:
            payload = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise RunFailed(seed, f"malformed JSON: {exc}") from exc
        if not isinstance(payload, dict) or set(payload) != {"seed", "metrics"}:
            raise RunFailed(seed, "output must be an object with keys 'seed' and 'metrics'")
        if payload["seed"] != seed:
            raise RunFailed(seed, f"output reports seed {payload['seed']!r}")
        if not isinstance(payload["metrics"], dict):
            raise RunFailed(seed, "'metrics' must be an object")
        return _coerce_record(seed, payload["metrics"])

    def __repr__(self):
        return f"SubprocessSource({self.command!r})"


def as_source(source) -> SimulationSource:
    if isinstance(source, SimulationSource):
        return source
    if callable(source):
        return InProcessSource(source)
    raise TypeError(f"cannot use {source!r} as a simulation source")


def execute_run(source, seed: int) -> MetricRecord:
    """Run one replicate; the returned record carries ``seed``."""
    return as_source(source).run(_check_seed(seed))


def run_batch(source, seed_from: int, seed_to: int, parallelism: int = 1) -> list[MetricRecord]:
    """Run every seed in ``[seed_from, seed_to]`` and return records sorted by seed.

    With ``parallelism > 1`` runs execute on a thread pool. The first failure
    in seed order is raised and runs that have not started are cancelled.
    """
    seed_from = _check_seed(seed_from)
    seed_to = _check_seed(seed_to)
    if seed_from > seed_to:
        raise InvalidRange(f"seed_from ({seed_from}) > seed_to ({seed_to})")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    source = as_source(source)
    seeds = range(seed_from, seed_to + 1)

    if parallelism == 1 or len(seeds) == 1:
        return [source.run(s) for s in seeds]

    records = []
    pool = ThreadPoolExecutor(max_workers=min(parallelism, len(seeds)))
    try:
        futures = [pool.submit(source.run, s) for s in seeds]
        for fut in futures:
            records.append(fut.result())
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
    return records


class RunStore:
    """Ordered records with contiguous seeds 1..J and a fixed metric schema."""

    def __init__(self, metric_names: Iterable[str] | None = None,
                 records: Iterable[MetricRecord] = ()):
        self.metric_names: tuple[str, ...] | None = (
            tuple(metric_names) if metric_names is not None else None
        )
        if self.metric_names is not None and len(set(self.metric_names)) != len(self.metric_names):
            raise SchemaMismatch("duplicate metric names")
        self.records: list[MetricRecord] = []
        self._columns: dict[str, list[float]] = {}
        self.extend(records)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, RunStore):
            return NotImplemented
        return (self.metric_names == other.metric_names
                and [(r.seed, dict(r.values)) for r in self.records]
                == [(r.seed, dict(r.values)) for r in other.records])

    def __repr__(self):
        return f"RunStore(J={len(self)}, metrics={self.metric_names})"

    @property
    def j(self) -> int:
        return len(self.records)

    def extend(self, records: Iterable[MetricRecord]) -> None:
        for rec in records:
            self.append(rec)

    def append(self, record: MetricRecord) -> None:
        expected = len(self.records) + 1
        if record.seed != expected:
            raise GapInSeeds(f"expected seed {expected}, got {record.seed}")
        names = tuple(record.values)
        if self.metric_names is None:
            self.metric_names = names
        elif set(names) != set(self.metric_names) or len(names) != len(self.metric_names):
            raise SchemaMismatch(
                f"seed {record.seed} has metrics {sorted(names)}, "
                f"store expects {sorted(self.metric_names)}"
            )
        # normalise key order to the store schema
        values = {n: float(record.values[n]) for n in self.metric_names}
        self.records.append(MetricRecord(record.seed, values))
        for n in self.metric_names:
            self._columns.setdefault(n, []).append(values[n])

    def column(self, name: str) -> np.ndarray:
        if self.metric_names is None or name not in self.metric_names:
            raise SchemaMismatch(f"no metric column named {name!r}")
        return np.asarray(self._columns.get(name, []), dtype=float)


def persist_runs(store: RunStore, path) -> None:
    """Write ``store`` as CSV: ``seed,<metric names>`` then one row per seed.

    Floats use Python's shortest round-trip repr, so loading gives back the
    identical values.
    """
    names = store.metric_names or ()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", *names])
        for rec in store.records:
            writer.writerow([rec.seed, *(repr(rec.values[n]) for n in names)])


def load_runs(path, metric_names: Sequence[str] | None = None) -> RunStore:
    """Read a CSV written by :func:`persist_runs`.

    If ``metric_names`` is given the header must list exactly those names in
    that order.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, no header") from None
        if not header or header[0] != "seed":
            raise SchemaMismatch(f"{path}: first column must be 'seed'")
        names = tuple(header[1:])
        if metric_names is not None and tuple(metric_names) != names:
            raise SchemaMismatch(f"{path}: header {list(names)} != expected {list(metric_names)}")
        store = RunStore(names or None)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                seed = int(row[0])
                values = {n: float(v) for n, v in zip(names, row[1:])}
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from exc
            if seed != store.j + 1:
                raise GapInSeeds(f"{path}:{lineno}: expected seed {store.j + 1}, got {seed}")
            for n, v in values.items():
                if not math.isfinite(v):
                    raise NonFiniteMetric(seed, n, v)
            store.append(MetricRecord(seed, values))
    return store
