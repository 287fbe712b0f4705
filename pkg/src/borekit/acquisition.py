"""Acquisition strategies over a search space.

Selectors cover four policies for a minimisation problem:

- ``bore_select``: greedy maximiser of the classifier mean.
- ``bore_pp_select``: maximiser of the clamped class-probability upper
  confidence bound.  Selection scans the unclamped score mean + beta *
  sigma: because clamping is monotone, any maximiser of the raw score is
  also a maximiser of the clamped one, and the raw score stays informative
  in regions where the clamp saturates at 1.
- ``gp_ucb_select``: lower-confidence-bound rule for a GP regression
  surrogate, i.e. maximise -mean + beta * sigma (the objective is being
  minimised, so low predicted values are good).
- ``gp_ei``: expected improvement below a threshold tau for the GP
  surrogate, with the convention that EI is 0 wherever sigma is 0.

Finite spaces are scanned exhaustively with ties broken by lowest index.
Boxes are optimised by multi-start projected gradient ascent from a
low-discrepancy start set with a backtracking step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.stats import norm, qmc

from .classifier import ClassifierPosterior, FeatureMapPosterior, KernelRidgePosterior
from .errors import InvalidInputError
from .kernels import Kernel, as_points, chol_gram
from .spaces import BoxSpace, FiniteSpace, SearchSpace

# Multi-start ascent defaults for box-mode selection.
N_STARTS = 32
N_PROBES = 1024
N_STEPS = 200


@dataclass(frozen=True, eq=False)
class GPRegressor(KernelRidgePosterior):
    """GP regression baseline sharing the ridge closed form (real targets).

    ``lam`` doubles as the noise-variance regulariser of the predictive
    equations; the confidence width reuses the classifier schedule with a
    norm bound on the objective instead of the classifier.
    """

    def beta_schedule(self, norm_bound: float, delta: float) -> float:
        return self.confidence_width(norm_bound, delta)

    def extend(self, x_new, y_new: float) -> "GPRegressor":
        xr = as_points(x_new)
        chol, counter = self._extended_chol(xr)
        inputs = np.vstack([self.inputs, xr]) if self.n_observations else xr
        targets = np.append(self.targets, float(y_new))
        alpha = self._solve_targets(chol, targets)
        return replace(
            self,
            inputs=inputs,
            targets=targets,
            chol=chol,
            alpha=alpha,
            updates_since_refactor=counter,
        )


def fit_gp(kernel: Kernel, inputs, targets, lam: float) -> GPRegressor:
    if lam <= 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    X = as_points(inputs) if np.size(inputs) else np.zeros((0, 1))
    y = np.asarray(targets, dtype=float).reshape(-1)
    if y.size != X.shape[0]:
        raise InvalidInputError(f"got {y.size} targets for {X.shape[0]} points")
    chol = chol_gram(kernel.gram(X), extra_diagonal=lam) if y.size else np.zeros((0, 0))
    gp = GPRegressor(
        kernel=kernel, inputs=X, targets=y, lam=lam, chol=chol, alpha=np.zeros(0)
    )
    if y.size:
        gp = replace(gp, alpha=gp._solve_targets(chol, y))
    return gp


def empty_gp(kernel: Kernel, dim: int, lam: float) -> GPRegressor:
    if lam <= 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    return GPRegressor(
        kernel=kernel,
        inputs=np.zeros((0, dim)),
        targets=np.zeros(0),
        lam=lam,
        chol=np.zeros((0, 0)),
        alpha=np.zeros(0),
    )


# -- selection ----------------------------------------------------------------


def argmax_finite(score: Callable[[np.ndarray], np.ndarray], space: FiniteSpace) -> np.ndarray:
    """Exhaustive-scan maximiser; ties break to the lowest index."""
    values = np.asarray(score(space.points), dtype=float).reshape(-1)
    if values.size != space.size:
        raise InvalidInputError("score function must return one value per candidate")
    return space.points[int(np.argmax(values))].copy()


def maximize_box(
    score: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    space: BoxSpace,
    n_starts: int = N_STARTS,
    n_steps: int = N_STEPS,
) -> np.ndarray:
    """Multi-start projected gradient ascent with a backtracking step.

    A Sobol probe sweep scans the box first and the best probes seed the
    ascent runs, so the result is anchored to a global scan before any
    local refinement.
    """
    sob = qmc.Sobol(space.dim, scramble=False)
    probes = space.lower + sob.random(N_PROBES) * (space.upper - space.lower)
    probe_scores = [score(p) for p in probes]
    starts = probes[np.argsort(probe_scores)[-n_starts:]]

    span = float(np.max(space.upper - space.lower))
    best_x, best_v = None, -np.inf
    for x0 in starts:
        x = x0.copy()
        v = score(x)
        step = 0.1 * span
        for _ in range(n_steps):
            g = grad(x)
            gn = float(np.linalg.norm(g))
            if not np.isfinite(gn) or gn < 1e-14:
                break
            trial_step = step
            moved = False
            while trial_step > 1e-12 * span:
                cand = space.project(x + trial_step * g / gn)
                cv = score(cand)
                if cv > v:
                    x, v, moved = cand, cv, True
                    break
                trial_step *= 0.5
            if not moved:
                break
        if v > best_v:
            best_x, best_v = x, v
    return best_x


Posterior = ClassifierPosterior | FeatureMapPosterior


def bore_select(post: Posterior, space: SearchSpace) -> np.ndarray:
    """Query point maximising the classifier mean."""
    if isinstance(space, FiniteSpace):
        return argmax_finite(post.mean, space)
    return maximize_box(
        lambda x: float(post.mean(x)), post.mean_grad, space
    )


def bore_pp_select(post: Posterior, space: SearchSpace) -> np.ndarray:
    """Query point maximising the clamped classifier upper confidence bound."""
    if isinstance(space, FiniteSpace):
        return argmax_finite(post.upper_score, space)
    return maximize_box(
        lambda x: float(post.upper_score(x)), post.upper_score_grad, space
    )


def gp_ucb_select(gp: GPRegressor, space: SearchSpace, beta: float) -> np.ndarray:
    """Query point maximising -mean + beta * sigma (minimisation convention)."""
    if isinstance(space, FiniteSpace):
        return argmax_finite(
            lambda X: -gp.mean(X) + beta * gp.stddev(X), space
        )
    return maximize_box(
        lambda x: float(-gp.mean(x) + beta * gp.stddev(x)),
        lambda x: -gp.mean_grad(x) + beta * gp.stddev_grad(x),
        space,
    )


def expected_improvement(mu, sigma, tau: float):
    """Closed-form EI below tau: (tau - mu) Psi(s) + sigma psi(s), s = (tau - mu) / sigma.

    Zero by convention wherever sigma = 0.
    """
    scalar = np.isscalar(mu)
    mu, sigma = np.atleast_1d(np.asarray(mu, dtype=float)), np.atleast_1d(
        np.asarray(sigma, dtype=float)
    )
    out = np.zeros_like(mu)
    pos = sigma > 0.0
    if np.any(pos):
        s = (tau - mu[pos]) / sigma[pos]
        out[pos] = (tau - mu[pos]) * norm.cdf(s) + sigma[pos] * norm.pdf(s)
    return float(out[0]) if scalar else out


def gp_ei(gp: GPRegressor, x, tau: float):
    """Expected improvement of the GP surrogate below tau."""
    return expected_improvement(gp.mean(x), gp.stddev(x), tau)


def gp_ei_select(gp: GPRegressor, space: SearchSpace, tau: float) -> np.ndarray:
    """Query point maximising expected improvement below tau."""
    if isinstance(space, FiniteSpace):
        return argmax_finite(lambda X: gp_ei(gp, X, tau), space)

    def ei_grad(x: np.ndarray) -> np.ndarray:
        sigma = gp.stddev(x)
        if sigma <= 0.0:
            return np.zeros(space.dim)
        s = (tau - gp.mean(x)) / sigma
        return -norm.cdf(s) * gp.mean_grad(x) + norm.pdf(s) * gp.stddev_grad(x)

    return maximize_box(lambda x: float(gp_ei(gp, x, tau)), ei_grad, space)
