"""Batch query proposal by Stein variational gradient descent.

A batch is treated as a sample from a target density proportional to the
acquisition score.  SVGD transports a set of M particles toward that
target with the update

    x_i <- x_i + step * zeta(x_i)
    zeta(x) = (1/M) sum_j [ k(x_j, x) grad log p(x_j) + grad_{x_j} k(x_j, x) ]

whose first term drives particles toward high-density regions and whose
second (repulsion) term keeps them spread out.  The transport kernel is a
squared exponential whose bandwidth follows the median heuristic,
h^2 = median(pairwise squared distances) / (2 log(M + 1)), recomputed every
step.

Two step rules are provided.  The default, ``rmsprop``, normalises the
update by a running RMS of past updates with averaging constant ``decay``;
at the defaults (step 0.001, decay 0.9, 1000 steps) it reproduces the
moments of simple targets, which a raw multiplicatively decayed step cannot
do because its total travel is bounded by step / (1 - decay).  The literal
``plain`` rule (step shrunk by ``decay`` every iteration) remains available
for comparison.

Particles are projected into the search box after every step.  A particle
set is an immutable snapshot; stepping returns a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .classifier import ClassifierPosterior, FeatureMapPosterior
from .errors import InvalidInputError
from .kernels import Kernel, as_points
from .spaces import BoxSpace, FiniteSpace, SearchSpace

# Floor under acquisition scores before taking logs; keeps gradients alive
# where the clamped score would be 0 or saturated.
SCORE_FLOOR = 1e-6


@dataclass(frozen=True)
class SvgdConfig:
    step_size: float = 1e-3
    decay: float = 0.9
    steps: int = 1000
    step_rule: str = "rmsprop"  # or "plain"
    score_floor: float = SCORE_FLOOR

    def __post_init__(self):
        if self.step_size <= 0:
            raise InvalidInputError(f"step_size must be positive, got {self.step_size}")
        if not 0.0 < self.decay <= 1.0:
            raise InvalidInputError(f"decay must lie in (0, 1], got {self.decay}")
        if self.steps < 1:
            raise InvalidInputError(f"steps must be >= 1, got {self.steps}")
        if self.step_rule not in ("rmsprop", "plain"):
            raise InvalidInputError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True, eq=False)
class ParticleSet:
    """M particles inside a box, plus the step-rule state carried between steps."""

    particles: np.ndarray  # (M, d)
    box: BoxSpace
    step_size: float = 1e-3
    decay: float = 0.9
    steps: int = 1000
    step_rule: str = "rmsprop"
    iteration: int = 0
    grad_sq_avg: np.ndarray | None = None

    def __post_init__(self):
        pts = as_points(self.particles)
        if pts.shape[0] < 1:
            raise InvalidInputError("particle set must contain at least one particle")
        object.__setattr__(self, "particles", self.box.project(pts))

    @property
    def size(self) -> int:
        return self.particles.shape[0]


@dataclass(frozen=True)
class LogDensityTarget:
    """Unnormalised log density and its gradient."""

    log_p: Callable[[np.ndarray], float]
    grad_log_p: Callable[[np.ndarray], np.ndarray]


def median_bandwidth(particles: np.ndarray) -> float:
    """Median-trick bandwidth; falls back to 1 for degenerate particle sets."""
    m = particles.shape[0]
    if m < 2:
        return 1.0
    d2 = ((particles[:, None, :] - particles[None, :, :]) ** 2).sum(-1)
    med = float(np.median(d2[np.triu_indices(m, 1)]))
    if med <= 0.0:
        return 1.0
    return math.sqrt(med / (2.0 * math.log(m + 1.0)))


def svgd_direction(
    particles: np.ndarray,
    target: LogDensityTarget,
    svgd_kernel: Kernel | None = None,
) -> np.ndarray:
    """The transport field zeta evaluated at every particle, shape (M, d)."""
    m = particles.shape[0]
    grads = np.empty_like(particles)
    for i in range(m):
        g = np.asarray(target.grad_log_p(particles[i]), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(i, particles[i])
        grads[i] = g

    if svgd_kernel is None:
        h = median_bandwidth(particles)
        svgd_kernel = Kernel(lengthscales=(h,))
    K = svgd_kernel.gram(particles)  # k(x_j, x_i), symmetric
    diff = particles[:, None, :] - particles[None, :, :]  # x_i - x_j
    ls = np.asarray(svgd_kernel._check_dim(particles.shape[1]))
    # grad_{x_j} k(x_j, x_i) = (x_i - x_j) / ls^2 * radial factor
    r2 = np.maximum(((diff / ls) ** 2).sum(-1), 0.0)
    gfac = svgd_kernel.output_scale * svgd_kernel._radial_grad_factor(r2)
    repulsion = (gfac[:, :, None] * diff / ls**2).sum(axis=1)
    return (K @ grads + repulsion) / m


class NonFiniteGradientError(InvalidInputError):
    def __init__(self, index: int, particle: np.ndarray):
        self.index = index
        super().__init__(
            f"non-finite log-density gradient at particle {index} "
            f"(position {np.array2string(particle, precision=5)})"
        )


def svgd_step(
    ps: ParticleSet,
    target: LogDensityTarget,
    svgd_kernel: Kernel | None = None,
) -> ParticleSet:
    """One synchronous SVGD update of every particle, projected into the box."""
    zeta = svgd_direction(ps.particles, target, svgd_kernel)
    if ps.step_rule == "rmsprop":
        prev = ps.grad_sq_avg if ps.grad_sq_avg is not None else np.zeros_like(zeta)
        sq = ps.decay * prev + (1.0 - ps.decay) * zeta**2
        moved = ps.particles + ps.step_size * zeta / np.sqrt(sq + 1e-8)
        return replace(
            ps,
            particles=ps.box.project(moved),
            iteration=ps.iteration + 1,
            grad_sq_avg=sq,
        )
    step = ps.step_size * ps.decay**ps.iteration
    moved = ps.particles + step * zeta
    return replace(ps, particles=ps.box.project(moved), iteration=ps.iteration + 1)


def run_svgd(
    ps: ParticleSet,
    target: LogDensityTarget,
    svgd_kernel: Kernel | None = None,
    n_steps: int | None = None,
) -> ParticleSet:
    """Run the configured number of steps (or ``n_steps``) from a snapshot."""
    total = ps.steps if n_steps is None else n_steps
    for _ in range(total):
        ps = svgd_step(ps, target, svgd_kernel)
    return ps


# -- batch proposal ------------------------------------------------------------


Posterior = ClassifierPosterior | FeatureMapPosterior


def posterior_log_target(
    post: Posterior, score: str = "ucb", score_floor: float = SCORE_FLOOR
) -> LogDensityTarget:
    """log max(floor, acquisition score) and its gradient as an SVGD target.

    ``score`` selects the surface: "ucb" follows the unclamped upper score
    (clamping is applied only when values are reported, never to the ascent
    surface, so gradients survive saturation), "mean" follows the raw
    classifier mean.
    """
    if score == "ucb":
        value, grad = post.upper_score, post.upper_score_grad
    elif score == "mean":
        value, grad = post.mean, post.mean_grad
    else:
        raise InvalidInputError(f"unknown score {score!r}")

    def log_p(x: np.ndarray) -> float:
        return math.log(max(float(value(x)), score_floor))

    def grad_log_p(x: np.ndarray) -> np.ndarray:
        v = float(value(x))
        if v <= score_floor:
            return np.zeros(np.asarray(x, dtype=float).reshape(-1).shape[0])
        return np.asarray(grad(x)) / v

    return LogDensityTarget(log_p=log_p, grad_log_p=grad_log_p)


def finite_batch_weights(post: Posterior, space: FiniteSpace, score: str = "ucb") -> np.ndarray:
    """Normalised clamped-score mass over a finite candidate set."""
    if score == "ucb":
        w = np.asarray(post.ucb(space.points), dtype=float)
    elif score == "mean":
        w = np.clip(np.asarray(post.mean(space.points), dtype=float), 0.0, None)
    else:
        raise InvalidInputError(f"unknown score {score!r}")
    total = float(w.sum())
    if total <= 0.0:
        return np.full(space.size, 1.0 / space.size)
    return w / total


def propose_batch(
    post: Posterior,
    space: SearchSpace,
    m: int,
    config: SvgdConfig,
    rng: np.random.Generator,
    score: str = "ucb",
) -> np.ndarray:
    """Propose M query points.

    Box spaces run SVGD on log max(floor, score) from uniformly initialised
    particles.  Finite spaces draw M i.i.d. candidates from the normalised
    clamped-score distribution instead (there is no gradient flow to
    exploit on a candidate list).
    """
    if m <= 0:
        raise InvalidInputError(f"batch size must be positive, got {m}")
    if isinstance(space, FiniteSpace):
        weights = finite_batch_weights(post, space, score)
        idx = rng.choice(space.size, size=m, replace=True, p=weights)
        return space.points[idx].copy()

    particles = space.sample_uniform(rng, m)
    ps = ParticleSet(
        particles=particles,
        box=space,
        step_size=config.step_size,
        decay=config.decay,
        steps=config.steps,
        step_rule=config.step_rule,
    )
    target = posterior_log_target(post, score, config.score_floor)
    return run_svgd(ps, target).particles.copy()
