"""Closed-form probabilistic least-squares classification in an RKHS.

Fitting ridge-regularised least squares to binary labels z in an RKHS gives
the posterior mean and deviation

    mean(x)   = k_t(x)^T (K_t + lam I)^{-1} z_t
    sigma2(x) = k(x, x) - k_t(x)^T (K_t + lam I)^{-1} k_t(x)

where K_t is the Gram matrix of the t query points and k_t(x) the vector of
kernel evaluations against them.  The mean is interpreted as a class-one
probability estimate (it may leave [0, 1]); sigma scaled by the confidence
width

    beta(delta) = b + sqrt(2 lam^{-1} log(|I + lam^{-1} K_t|^{1/2} / delta))

gives a deviation band that covers the optimal classifier with probability
at least 1 - delta whenever its RKHS norm is at most b and the label noise
is 1-sub-Gaussian.  The clamped upper bound

    ucb(x) = min(1, max(0, mean(x) + beta * sigma(x)))

is the acquisition score of the confidence-bound optimiser.

Everything is computed through a lower Cholesky factor L of K_t + lam I,
which is extended by one row per new observation and rebuilt from scratch
every ``REFACTOR_EVERY`` updates to bound float drift.  A posterior is an
immutable snapshot: updates return new instances, so snapshots can be read
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidInputError, NumericalError
from .kernels import SQUARED_EXPONENTIAL, Kernel, as_points, chol_gram

# Full refactorisation cadence for the incremental Cholesky update.
REFACTOR_EVERY = 50

# Predicted variances in [-VARIANCE_SLACK, 0) are roundoff and clamp to 0;
# anything more negative indicates a bug.
VARIANCE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class KernelRidgePosterior:
    """Immutable kernel ridge solve shared by the classifier and GP baseline."""

    kernel: Kernel
    inputs: np.ndarray   # (t, d)
    targets: np.ndarray  # (t,)
    lam: float
    chol: np.ndarray     # (t, t) lower factor of K_t + lam I
    alpha: np.ndarray    # (t,) solution of (K_t + lam I) alpha = targets
    updates_since_refactor: int = 0

    @property
    def n_observations(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    # -- queries -------------------------------------------------------------

    def _query_points(self, x) -> tuple[np.ndarray, bool]:
        X = as_points(x)
        if X.shape[1] != self.dim:
            raise InvalidInputError(
                f"query dimension {X.shape[1]} != posterior dimension {self.dim}"
            )
        single = np.asarray(x).ndim <= 1
        return X, single

    def mean(self, x):
        """Posterior mean at one point (float) or a batch (array)."""
        X, single = self._query_points(x)
        if self.n_observations == 0:
            out = np.zeros(X.shape[0])
        else:
            out = self.kernel(X, self.inputs) @ self.alpha
        return float(out[0]) if single else out

    def variance(self, x):
        """Posterior variance, clamped to [0, k(x, x)]."""
        X, single = self._query_points(x)
        kxx = np.full(X.shape[0], self.kernel.output_scale)
        if self.n_observations == 0:
            var = kxx
        else:
            kt = self.kernel(self.inputs, X)  # (t, n)
            v = solve_triangular(self.chol, kt, lower=True)
            var = kxx - np.sum(v**2, axis=0)
            low = float(np.min(var))
            if low < -VARIANCE_SLACK:
                raise NumericalError(
                    f"predicted variance {low:.3e} below roundoff tolerance"
                )
            np.clip(var, 0.0, None, out=var)
        return float(var[0]) if single else var

    def stddev(self, x):
        var = self.variance(x)
        return math.sqrt(var) if np.isscalar(var) else np.sqrt(var)

    def log_det_ratio(self) -> float:
        """log |I + lam^{-1} K_t|, from the Cholesky diagonal."""
        t = self.n_observations
        if t == 0:
            return 0.0
        return float(
            2.0 * np.sum(np.log(np.diag(self.chol))) - t * math.log(self.lam)
        )

    def information_gain(self) -> float:
        """Realised information gain of the query sequence, 0.5 log |I + lam^{-1} K_t|."""
        return 0.5 * self.log_det_ratio()

    def confidence_width(self, norm_bound: float, delta: float) -> float:
        """b + sqrt(2 lam^{-1} log(|I + lam^{-1} K_t|^{1/2} / delta))."""
        if not 0.0 < delta < 1.0:
            raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
        inner = 0.5 * self.log_det_ratio() + math.log(1.0 / delta)
        return norm_bound + math.sqrt(2.0 / self.lam * inner)

    # -- gradients -----------------------------------------------------------

    def mean_grad(self, x) -> np.ndarray:
        """Gradient of the posterior mean at a single point, shape (d,)."""
        X, _ = self._query_points(x)
        if X.shape[0] != 1:
            raise InvalidInputError("mean_grad expects a single point")
        if self.n_observations == 0:
            return np.zeros(self.dim)
        G = self.kernel.grad(X, self.inputs)  # (t, d)
        return G.T @ self.alpha

    def variance_grad(self, x) -> np.ndarray:
        """Gradient of the posterior variance at a single point, shape (d,)."""
        X, _ = self._query_points(x)
        if X.shape[0] != 1:
            raise InvalidInputError("variance_grad expects a single point")
        if self.n_observations == 0:
            return np.zeros(self.dim)
        kt = self.kernel(self.inputs, X)[:, 0]
        w = solve_triangular(self.chol, kt, lower=True)
        w = solve_triangular(self.chol.T, w, lower=False)
        G = self.kernel.grad(X, self.inputs)  # (t, d)
        # grad k(x, x) vanishes for stationary kernels
        return -2.0 * (G.T @ w)

    def stddev_grad(self, x) -> np.ndarray:
        sig = self.stddev(as_points(x)[0])
        return self.variance_grad(x) / (2.0 * max(sig, 1e-15))

    # -- updates -------------------------------------------------------------

    def _extended_chol(self, x_new: np.ndarray) -> tuple[np.ndarray, int]:
        """Append one input row to the factor, refactoring on cadence."""
        t = self.n_observations
        counter = self.updates_since_refactor + 1
        if t == 0 or counter >= REFACTOR_EVERY:
            X = np.vstack([self.inputs, x_new])
            return chol_gram(self.kernel.gram(X), extra_diagonal=self.lam), 0
        kvec = self.kernel(self.inputs, x_new)[:, 0]
        l = solve_triangular(self.chol, kvec, lower=True)
        d2 = self.kernel.output_scale + self.lam - float(np.sum(l**2))
        if d2 <= 0.0:
            # numerically degenerate append; fall back to a full refactor
            X = np.vstack([self.inputs, x_new])
            return chol_gram(self.kernel.gram(X), extra_diagonal=self.lam), 0
        L = np.zeros((t + 1, t + 1))
        L[:t, :t] = self.chol
        L[t, :t] = l
        L[t, t] = math.sqrt(d2)
        return L, counter

    def _solve_targets(self, chol: np.ndarray, targets: np.ndarray) -> np.ndarray:
        w = solve_triangular(chol, targets, lower=True)
        return solve_triangular(chol.T, w, lower=False)


def _validate_binary(labels) -> np.ndarray:
    z = np.asarray(labels, dtype=float).reshape(-1)
    if not np.all((z == 0.0) | (z == 1.0)):
        raise InvalidInputError("labels must be binary (0 or 1)")
    return z


@dataclass(frozen=True, eq=False)
class ClassifierPosterior(KernelRidgePosterior):
    """Probabilistic least-squares classifier snapshot.

    Adds the confidence parameters: ``norm_bound`` is an upper bound b on
    the RKHS norm of the optimal classifier and ``delta`` the failure
    probability of the deviation band.  ``fixed_beta`` short-circuits the
    theory schedule with a constant width (the practical setting; the
    schedule grows so fast that the clamped bound saturates at 1 for long
    stretches of small-sample runs).
    """

    norm_bound: float = 1.0
    delta: float = 0.1
    fixed_beta: float | None = None

    def beta(self) -> float:
        if self.fixed_beta is not None:
            return self.fixed_beta
        return self.confidence_width(self.norm_bound, self.delta)

    def ucb(self, x):
        """Clamped class-probability upper bound min(1, max(0, mean + beta sigma))."""
        raw = self.upper_score(x)
        return min(1.0, max(0.0, raw)) if np.isscalar(raw) else np.clip(raw, 0.0, 1.0)

    def upper_score(self, x):
        """Unclamped mean + beta * sigma; every maximiser of this score also
        maximises the clamped ucb, and it stays informative where the clamp
        saturates."""
        return self.mean(x) + self.beta() * self.stddev(x)

    def upper_score_grad(self, x) -> np.ndarray:
        return self.mean_grad(x) + self.beta() * self.stddev_grad(x)

    def with_labels(self, labels) -> "ClassifierPosterior":
        """Same inputs and factor, new label vector (quantile relabeling)."""
        z = _validate_binary(labels)
        if z.size != self.n_observations:
            raise InvalidInputError(
                f"got {z.size} labels for {self.n_observations} observations"
            )
        alpha = self._solve_targets(self.chol, z) if z.size else np.zeros(0)
        return replace(self, targets=z, alpha=alpha)

    def extend(self, x_new, labels) -> "ClassifierPosterior":
        """Add one observation and relabel the whole history in one step."""
        xr = as_points(x_new)
        if xr.shape[0] != 1 or (self.n_observations and xr.shape[1] != self.dim):
            raise InvalidInputError("extend expects a single point of matching dimension")
        z = _validate_binary(labels)
        if z.size != self.n_observations + 1:
            raise InvalidInputError(
                f"got {z.size} labels for {self.n_observations + 1} observations"
            )
        chol, counter = self._extended_chol(xr)
        inputs = np.vstack([self.inputs, xr]) if self.n_observations else xr
        alpha = self._solve_targets(chol, z)
        return replace(
            self,
            inputs=inputs,
            targets=z,
            chol=chol,
            alpha=alpha,
            updates_since_refactor=counter,
        )


def fit_classifier(
    kernel: Kernel,
    inputs,
    labels,
    lam: float,
    norm_bound: float = 1.0,
    delta: float = 0.1,
    fixed_beta: float | None = None,
) -> ClassifierPosterior:
    """Fit the closed-form PLS classifier from scratch."""
    if lam <= 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    X = as_points(inputs) if np.size(inputs) else np.zeros((0, 1))
    z = _validate_binary(labels)
    if z.size != X.shape[0]:
        raise InvalidInputError(f"got {z.size} labels for {X.shape[0]} points")
    chol = chol_gram(kernel.gram(X), extra_diagonal=lam) if z.size else np.zeros((0, 0))
    post = ClassifierPosterior(
        kernel=kernel,
        inputs=X,
        targets=z,
        lam=lam,
        chol=chol,
        alpha=np.zeros(0),
        norm_bound=norm_bound,
        delta=delta,
        fixed_beta=fixed_beta,
    )
    return post.with_labels(z) if z.size else post


def empty_classifier(
    kernel: Kernel,
    dim: int,
    lam: float,
    norm_bound: float = 1.0,
    delta: float = 0.1,
    fixed_beta: float | None = None,
) -> ClassifierPosterior:
    """The t = 0 prior state: mean 0 everywhere, sigma^2 = k(x, x)."""
    if lam <= 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    return ClassifierPosterior(
        kernel=kernel,
        inputs=np.zeros((0, dim)),
        targets=np.zeros(0),
        lam=lam,
        chol=np.zeros((0, 0)),
        alpha=np.zeros(0),
        norm_bound=norm_bound,
        delta=delta,
        fixed_beta=fixed_beta,
    )


def sequential_information_gain(kernel: Kernel, inputs, lam: float) -> float:
    """Information gain as the sequential sum 0.5 sum log(1 + lam^{-1} sigma2_{i-1}(x_i)).

    Walks the query sequence conditioning on one point at a time; agrees
    with the determinant form computed by ``information_gain`` up to
    roundoff, which is a testable identity.
    """
    X = as_points(inputs) if np.size(inputs) else np.zeros((0, 1))
    post = empty_classifier(kernel, X.shape[1] if X.size else 1, lam)
    total = 0.0
    for i in range(X.shape[0]):
        var = post.variance(X[i])
        total += 0.5 * math.log1p(var / lam)
        post = post.extend(X[i], np.zeros(i + 1))
    return total


# -- random Fourier feature backend ------------------------------------------


@dataclass(frozen=True, eq=False)
class FeatureMapPosterior:
    """Least-squares classifier in an explicit random-feature space.

    The feature map phi approximates the squared-exponential kernel, so the
    posterior matches the kernel classifier up to the feature approximation:

        mean(x)   = phi(x)^T (Phi^T Phi + lam I)^{-1} Phi^T z
        sigma2(x) = lam * phi(x)^T (Phi^T Phi + lam I)^{-1} phi(x)

    which are the Woodbury-rewritten kernel formulas.  Features come in
    cos/sin pairs over quasi-random Gaussian frequencies (scrambled Sobol
    points through the normal quantile); the pairing removes the phase
    noise of the classic single-cosine construction and the low-discrepancy
    frequencies cut the approximation error well below the 0.05 contract at
    300 features.  Same query surface as ClassifierPosterior.
    """

    kernel: Kernel
    frequencies: np.ndarray  # (m/2, d)
    inputs: np.ndarray
    targets: np.ndarray
    lam: float
    chol: np.ndarray         # (m, m) lower factor of Phi^T Phi + lam I
    weights: np.ndarray      # (m,)
    norm_bound: float = 1.0
    delta: float = 0.1
    fixed_beta: float | None = None

    @property
    def n_features(self) -> int:
        return 2 * self.frequencies.shape[0]

    @property
    def n_observations(self) -> int:
        return self.inputs.shape[0]

    def features(self, x) -> np.ndarray:
        X = as_points(x)
        ls = np.asarray(self.kernel.lengthscales)
        proj = (X / ls) @ self.frequencies.T  # (n, m/2)
        scale = math.sqrt(self.kernel.output_scale / self.frequencies.shape[0])
        return scale * np.concatenate([np.cos(proj), np.sin(proj)], axis=1)

    def _feature_grads(self, x) -> np.ndarray:
        """d phi / dx at a single point, shape (m, d)."""
        X = as_points(x)
        ls = np.asarray(self.kernel.lengthscales)
        proj = ((X / ls) @ self.frequencies.T)[0]  # (m/2,)
        scale = math.sqrt(self.kernel.output_scale / self.frequencies.shape[0])
        wl = self.frequencies / ls  # (m/2, d)
        return scale * np.concatenate(
            [-np.sin(proj)[:, None] * wl, np.cos(proj)[:, None] * wl], axis=0
        )

    def mean(self, x):
        X, single = as_points(x), np.asarray(x).ndim <= 1
        out = self.features(X) @ self.weights
        return float(out[0]) if single else out

    def variance(self, x):
        X, single = as_points(x), np.asarray(x).ndim <= 1
        phi = self.features(X)
        v = solve_triangular(self.chol, phi.T, lower=True)
        var = self.lam * np.sum(v**2, axis=0)
        return float(var[0]) if single else var

    def stddev(self, x):
        var = self.variance(x)
        return math.sqrt(var) if np.isscalar(var) else np.sqrt(var)

    def log_det_ratio(self) -> float:
        m = self.n_features
        return float(
            2.0 * np.sum(np.log(np.diag(self.chol))) - m * math.log(self.lam)
        )

    def information_gain(self) -> float:
        return 0.5 * self.log_det_ratio()

    def beta(self) -> float:
        if self.fixed_beta is not None:
            return self.fixed_beta
        inner = 0.5 * self.log_det_ratio() + math.log(1.0 / self.delta)
        return self.norm_bound + math.sqrt(2.0 / self.lam * inner)

    def ucb(self, x):
        raw = self.upper_score(x)
        return min(1.0, max(0.0, raw)) if np.isscalar(raw) else np.clip(raw, 0.0, 1.0)

    def upper_score(self, x):
        return self.mean(x) + self.beta() * self.stddev(x)

    def mean_grad(self, x) -> np.ndarray:
        return self._feature_grads(x).T @ self.weights

    def stddev_grad(self, x) -> np.ndarray:
        phi = self.features(x)[0]
        w = solve_triangular(self.chol, phi, lower=True)
        w = solve_triangular(self.chol.T, w, lower=False)
        grad_var = 2.0 * self.lam * (self._feature_grads(x).T @ w)
        sig = self.stddev(as_points(x)[0])
        return grad_var / (2.0 * max(sig, 1e-15))

    def upper_score_grad(self, x) -> np.ndarray:
        return self.mean_grad(x) + self.beta() * self.stddev_grad(x)


def sample_feature_map(
    kernel: Kernel, n_features: int, rng: np.random.Generator, dim: int
) -> np.ndarray:
    """Quasi-random Gaussian frequency matrix for a squared-exponential kernel.

    Returns (n_features // 2, dim) frequency rows; each contributes a
    cos/sin feature pair, so the realised feature dimension is rounded down
    to an even number.
    """
    from scipy.stats import norm as _norm, qmc as _qmc

    if kernel.family != SQUARED_EXPONENTIAL:
        raise InvalidInputError(
            "the feature-map backend supports the squared-exponential family only"
        )
    if n_features < 2:
        raise InvalidInputError(f"need at least two features, got {n_features}")
    half = n_features // 2
    budget = 1 << max(half - 1, 1).bit_length()  # Sobol balance wants powers of 2
    sob = _qmc.Sobol(dim, scramble=True, seed=rng)
    u = sob.random(budget)[:half]
    return _norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))


def fit_feature_map_classifier(
    kernel: Kernel,
    frequencies: np.ndarray,
    inputs,
    labels,
    lam: float,
    norm_bound: float = 1.0,
    delta: float = 0.1,
    fixed_beta: float | None = None,
) -> FeatureMapPosterior:
    """Fit the least-squares classifier in the sampled feature space."""
    if lam <= 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    X = as_points(inputs) if np.size(inputs) else np.zeros((0, frequencies.shape[1]))
    z = _validate_binary(labels)
    if z.size != X.shape[0]:
        raise InvalidInputError(f"got {z.size} labels for {X.shape[0]} points")
    m = 2 * frequencies.shape[0]
    post = FeatureMapPosterior(
        kernel=kernel,
        frequencies=np.asarray(frequencies, dtype=float),
        inputs=X,
        targets=z,
        lam=lam,
        chol=np.zeros((0, 0)),
        weights=np.zeros(m),
        norm_bound=norm_bound,
        delta=delta,
        fixed_beta=fixed_beta,
    )
    Phi = post.features(X) if z.size else np.zeros((0, m))
    A = Phi.T @ Phi
    chol = chol_gram(A, extra_diagonal=lam)
    w = solve_triangular(chol, Phi.T @ z, lower=True)
    weights = solve_triangular(chol.T, w, lower=False)
    return replace(post, chol=chol, weights=weights)
