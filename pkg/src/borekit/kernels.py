"""Positive-definite kernels, Gram matrices and finite-domain RKHS norms.

All kernels are stationary with per-dimension lengthscales (ARD) and an
output scale ``s``, so ``k(x, x) = s`` everywhere.  Writing
``u = (x - x') / lengthscales`` and ``r^2 = ||u||^2``:

- squared exponential:   k = s * exp(-r^2 / 2)
- Matern 5/2:            k = s * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r)
- rational quadratic:    k = s * (1 + r^2 / (2 a))^(-a)

Point convention: a 1-D array is a single point whose dimension is its
length; batches of points are 2-D arrays of shape (n, d).  Scalars are
single 1-D points.

Kernels are frozen after construction and Gram matrices are plain arrays,
so both can be shared across concurrent evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky as _cholesky, solve_triangular

from .errors import InvalidInputError, NumericalError

SQUARED_EXPONENTIAL = "squared_exponential"
MATERN52 = "matern52"
RATIONAL_QUADRATIC = "rational_quadratic"

_FAMILIES = (SQUARED_EXPONENTIAL, MATERN52, RATIONAL_QUADRATIC)

_SQRT5 = math.sqrt(5.0)

# Relative diagonal jitter applied before factorising raw Gram matrices.
JITTER_SCALE = 1e-10


def as_points(x) -> np.ndarray:
    """Normalise a point or a batch of points to a float array (n, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim == 2:
        return arr
    raise InvalidInputError(f"points must be at most 2-D, got shape {arr.shape}")


@dataclass(frozen=True)
class Kernel:
    """A stationary positive-definite kernel.

    ``lengthscales`` is either a single shared value or one value per input
    dimension; a shared value broadcasts to any dimensionality, while a
    per-dimension tuple pins the expected dimension.
    """

    family: str = SQUARED_EXPONENTIAL
    lengthscales: tuple[float, ...] = (1.0,)
    output_scale: float = 1.0
    rq_alpha: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInputError(
                f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}"
            )
        ls = self.lengthscales
        if np.isscalar(ls):
            ls = (float(ls),)
        else:
            ls = tuple(float(v) for v in ls)
        object.__setattr__(self, "lengthscales", ls)
        if any(v <= 0 for v in ls):
            raise InvalidInputError(f"lengthscales must be positive, got {ls}")
        if self.output_scale <= 0:
            raise InvalidInputError(f"output_scale must be positive, got {self.output_scale}")
        if self.rq_alpha <= 0:
            raise InvalidInputError(f"rq_alpha must be positive, got {self.rq_alpha}")

    # -- shape handling -----------------------------------------------------

    def _check_dim(self, d: int) -> np.ndarray:
        ls = np.asarray(self.lengthscales)
        if ls.size == 1:
            return np.full(d, ls[0])
        if ls.size != d:
            raise InvalidInputError(
                f"kernel expects {ls.size}-dimensional inputs, got dimension {d}"
            )
        return ls

    def _scaled(self, X: np.ndarray) -> np.ndarray:
        return X / self._check_dim(X.shape[1])

    # -- radial profiles ----------------------------------------------------

    def _radial(self, r2: np.ndarray) -> np.ndarray:
        if self.family == SQUARED_EXPONENTIAL:
            return np.exp(-0.5 * r2)
        if self.family == MATERN52:
            r = np.sqrt(r2)
            return (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)
        a = self.rq_alpha
        return (1.0 + r2 / (2.0 * a)) ** (-a)

    def _radial_grad_factor(self, r2: np.ndarray) -> np.ndarray:
        # g(r2) such that grad_x k(x, x') = -s * g * (x - x') / lengthscales^2
        if self.family == SQUARED_EXPONENTIAL:
            return np.exp(-0.5 * r2)
        if self.family == MATERN52:
            r = np.sqrt(r2)
            return (5.0 / 3.0) * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
        a = self.rq_alpha
        return (1.0 + r2 / (2.0 * a)) ** (-a - 1.0)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, X1, X2) -> np.ndarray:
        """Cross-covariance matrix of shape (n1, n2)."""
        A = self._scaled(as_points(X1))
        B = self._scaled(as_points(X2))
        if A.shape[1] != B.shape[1]:
            raise InvalidInputError(
                f"point dimensions differ: {A.shape[1]} vs {B.shape[1]}"
            )
        r2 = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        np.maximum(r2, 0.0, out=r2)
        return self.output_scale * self._radial(r2)

    def gram(self, X) -> np.ndarray:
        """Symmetric Gram matrix over one point set, exact unit diagonal scale."""
        K = self(X, X)
        # enforce exact symmetry and k(x, x) = output_scale on the diagonal
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, self.output_scale)
        return K

    def grad(self, x, X2) -> np.ndarray:
        """Gradient of k(x, x2) with respect to x, one row per point in X2.

        Returns shape (n2, d); for a single x2 the caller can take row 0.
        """
        xp = as_points(x)
        if xp.shape[0] != 1:
            raise InvalidInputError("grad expects a single first point")
        B = as_points(X2)
        ls = self._check_dim(xp.shape[1])
        if B.shape[1] != xp.shape[1]:
            raise InvalidInputError(
                f"point dimensions differ: {xp.shape[1]} vs {B.shape[1]}"
            )
        diff = xp - B  # (n2, d)
        r2 = np.sum((diff / ls) ** 2, axis=1)
        g = self._radial_grad_factor(r2)
        return -self.output_scale * g[:, None] * diff / ls**2


def eval_kernel(kernel: Kernel, x, x2) -> float:
    """k(x, x2) for two single points."""
    return float(kernel(x, x2)[0, 0])


def eval_kernel_grad(kernel: Kernel, x, x2) -> np.ndarray:
    """Gradient of k with respect to its first argument, shape (d,)."""
    return kernel.grad(x, x2)[0]


def gram_jitter(K: np.ndarray) -> float:
    """Diagonal stabiliser for raw Gram matrices: 1e-10 * trace / n."""
    n = K.shape[0]
    if n == 0:
        return 0.0
    return JITTER_SCALE * float(np.trace(K)) / n


def chol_gram(K: np.ndarray, extra_diagonal: float = 0.0) -> np.ndarray:
    """Lower Cholesky factor of K + extra_diagonal * I, with jitter fallback.

    The matrix is factorised as given first; only if that fails is the
    jitter ``gram_jitter(K)`` added.  Raises NumericalError with a condition
    estimate when the jittered matrix still fails.
    """
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    M = K if extra_diagonal == 0.0 else K + extra_diagonal * np.eye(n)
    try:
        return _cholesky(M, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        pass
    jitter = gram_jitter(K) + abs(extra_diagonal) * 1e-12
    try:
        return _cholesky(M + jitter * np.eye(n), lower=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        cond = _condition_estimate(M)
        raise NumericalError(
            f"Cholesky factorisation failed even with jitter {jitter:g}; "
            f"condition estimate {cond:.3e}"
        ) from exc


def _condition_estimate(M: np.ndarray) -> float:
    try:
        eig = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError:
        return math.inf
    low = max(float(eig[0]), np.finfo(float).tiny)
    return float(eig[-1]) / low


def rkhs_norm_finite(kernel: Kernel, points, values) -> float:
    """Minimum RKHS norm of any function interpolating ``values`` on ``points``.

    On a finite domain the minimiser is the kernel interpolant, whose norm is
    sqrt(v^T K^{-1} v).  The Gram matrix receives the standard diagonal
    jitter before factorisation.
    """
    X = as_points(points)
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != X.shape[0]:
        raise InvalidInputError(
            f"got {v.size} values for {X.shape[0]} points"
        )
    if v.size == 0:
        return 0.0
    K = kernel.gram(X)
    L = chol_gram(K, extra_diagonal=gram_jitter(K))
    w = solve_triangular(L, v, lower=True)
    return float(np.sqrt(np.sum(w**2)))
