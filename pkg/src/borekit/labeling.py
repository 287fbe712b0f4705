"""Empirical CDF, quantile thresholds and binary labels for observations.

The quantile convention is nearest-rank inclusive: the threshold is the
smallest observed value whose empirical CDF reaches the requested level.
Labelling with that threshold therefore always produces at least one
positive label, which keeps the downstream classifier non-degenerate.
Ties (equal observations) are labelled inclusively.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError


def _as_observations(ys) -> np.ndarray:
    arr = np.asarray(ys, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InvalidInputError("observation set is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("observations must be finite")
    return arr


def empirical_cdf(ys, s: float) -> float:
    """Fraction of observations less than or equal to s."""
    arr = _as_observations(ys)
    return float(np.count_nonzero(arr <= s)) / arr.size


def quantile(ys, gamma: float) -> float:
    """Nearest-rank inclusive gamma-quantile: min observed s with CDF(s) >= gamma."""
    arr = _as_observations(ys)
    if not 0.0 < gamma < 1.0:
        raise InvalidInputError(f"gamma must lie in (0, 1), got {gamma}")
    rank = max(math.ceil(gamma * arr.size), 1)
    return float(np.sort(arr)[rank - 1])


def labels(ys, tau: float) -> np.ndarray:
    """Binary labels z_i = 1[y_i <= tau] as a float vector."""
    arr = _as_observations(ys)
    return (arr <= tau).astype(float)


def binary_cross_entropy(z, probs) -> float:
    """Mean binary cross-entropy of predicted probabilities on 0/1 labels.

    Diagnostic loss evaluator only; predictions are clipped away from
    {0, 1} so the value stays finite.
    """
    zv = np.asarray(z, dtype=float).reshape(-1)
    pv = np.clip(np.asarray(probs, dtype=float).reshape(-1), 1e-12, 1.0 - 1e-12)
    if zv.size != pv.size:
        raise InvalidInputError(f"got {zv.size} labels for {pv.size} predictions")
    if zv.size == 0:
        raise InvalidInputError("empty label vector")
    if not np.all((zv == 0.0) | (zv == 1.0)):
        raise InvalidInputError("labels must be binary")
    return float(-np.mean(zv * np.log(pv) + (1.0 - zv) * np.log1p(-pv)))
