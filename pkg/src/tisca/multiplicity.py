"""Multiple-comparison adjustment of p-value families."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import EmptyInput, OutOfRangeP

METHODS = ("none", "bonferroni", "holm", "bh")

_ALIASES = {"BH": "bh", "fdr_bh": "bh", "benjamini-hochberg": "bh"}


def normalize_method(method: str) -> str:
    """Map user-facing spellings (``"BH"``) onto canonical method names."""
    m = _ALIASES.get(method, method)
    if m not in METHODS:
        raise ValueError(f"unknown correction method {method!r}; expected one of "
                         f"'none', 'bonferroni', 'holm', 'BH'")
    return m


def adjust_p_values(p: Sequence[float], method: str = "none") -> np.ndarray:
    """Adjust raw p-values for multiplicity.

    Parameters
    ----------
    p : sequence of float
        Raw p-values in [0, 1].
    method : {"none", "bonferroni", "holm", "bh"}
        ``"BH"`` is accepted as an alias of ``"bh"``.

    Returns
    -------
    numpy.ndarray
        Adjusted p-values aligned with the input and clipped at 1. Holm is
        the step-down procedure with a running maximum; Benjamini-Hochberg is
        the step-up procedure with a running minimum from the largest p.
    """
    method = normalize_method(method)
    raw = np.asarray(p, dtype=float).ravel()
    if raw.size == 0:
        raise EmptyInput("no p-values to adjust")
    for i, v in enumerate(raw):
        if not (0.0 <= v <= 1.0):  # also rejects NaN
            raise OutOfRangeP(i, float(v))

    m = raw.size
    if method == "none":
        return raw.copy()
    if method == "bonferroni":
        return np.minimum(raw * m, 1.0)

    order = np.argsort(raw, kind="stable")
    ranked = raw[order]
    if method == "holm":
        scaled = ranked * (m - np.arange(m))
        adj_sorted = np.maximum.accumulate(scaled)
    else:
        scaled = ranked * (m / np.arange(1, m + 1))
        adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj_sorted, 1.0)
    return out
