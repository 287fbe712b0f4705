"""Search spaces: finite candidate sets and axis-aligned boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .kernels import as_points


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """A non-empty, ordered set of candidate points, shape (n, d)."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.shape[0] == 0:
            raise InvalidInputError("finite space must contain at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def index_of(self, x) -> int:
        """Index of an exact member point; raises for non-members."""
        q = as_points(x)[0]
        hits = np.flatnonzero(np.all(self.points == q, axis=1))
        if hits.size == 0:
            raise InvalidInputError("point is not a member of the finite space")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class BoxSpace:
    """An axis-aligned box with strictly ordered bounds per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("box bounds must be vectors of equal length")
        if not np.all(lo < hi):
            raise InvalidInputError("box requires lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        pts = as_points(x)
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))

    def project(self, x) -> np.ndarray:
        """Clip points into the box, preserving input shape."""
        arr = np.asarray(x, dtype=float)
        return np.clip(arr, self.lower, self.upper)

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


SearchSpace = FiniteSpace | BoxSpace
