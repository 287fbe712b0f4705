"""Synthetic objectives and analytic test functions.

The synthetic family starts from a random classifier in the RKHS of a
kernel k,

    pi*(x) = sum_i alpha_i k(x, c_i),

with centers and raw weights drawn uniformly from (0, 1) and the weights
normalised so ||pi*||_k = 1, which guarantees 0 < pi*(x) <= 1 everywhere.
Given a threshold tau and a noise model with strictly monotone CDF F, the
matching objective is

    f(x) = tau - F^{-1}(pi*(x)),

so that p(y <= tau | x) = F(tau - f(x)) = pi*(x) exactly and the maximiser
of pi* coincides with the minimiser of f.  The domain is a finite uniform
sample of the unit cube, which makes the optimum, the exact positive-class
mass gamma = mean(pi*), and the ideal batch-sampling distribution
ell = pi* / sum(pi*) all computable in closed form.

Analytic objectives are standard global-optimisation test functions with
frozen high-precision minima, optionally observed through additive noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import cauchy, norm, t as student_t

from .errors import InvalidInputError
from .kernels import Kernel
from .spaces import BoxSpace, FiniteSpace


# -- noise models ---------------------------------------------------------------


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float = 0.1

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidInputError(f"sigma must be positive, got {self.sigma}")

    def cdf(self, v):
        return norm.cdf(v, scale=self.sigma)

    def inv_cdf(self, p):
        return norm.ppf(p, scale=self.sigma)

    def pdf(self, v):
        return norm.pdf(v, scale=self.sigma)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(0.0, self.sigma, size=size)


@dataclass(frozen=True)
class StudentTNoise:
    dof: float = 3.0
    scale: float = 0.1

    def __post_init__(self):
        if self.dof <= 0 or self.scale <= 0:
            raise InvalidInputError("dof and scale must be positive")

    def cdf(self, v):
        return student_t.cdf(v, df=self.dof, scale=self.scale)

    def inv_cdf(self, p):
        return student_t.ppf(p, df=self.dof, scale=self.scale)

    def pdf(self, v):
        return student_t.pdf(v, df=self.dof, scale=self.scale)

    def sample(self, rng: np.random.Generator, size=None):
        return self.scale * rng.standard_t(self.dof, size=size)


@dataclass(frozen=True)
class CauchyNoise:
    scale: float = 0.1

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidInputError(f"scale must be positive, got {self.scale}")

    def cdf(self, v):
        return cauchy.cdf(v, scale=self.scale)

    def inv_cdf(self, p):
        return cauchy.ppf(p, scale=self.scale)

    def pdf(self, v):
        return cauchy.pdf(v, scale=self.scale)

    def sample(self, rng: np.random.Generator, size=None):
        return self.scale * rng.standard_cauchy(size=size)


NoiseModel = GaussianNoise | StudentTNoise | CauchyNoise


def lipschitz_of_inverse_cdf(noise: NoiseModel, lo: float, hi: float) -> float:
    """Largest slope of the inverse noise CDF over probabilities [lo, hi].

    d/dp F^{-1}(p) = 1 / pdf(F^{-1}(p)) is smallest at p = 1/2 and grows
    toward either tail for the (unimodal, symmetric) supported families, so
    the supremum over an interval sits at an endpoint.
    """
    if not 0.0 < lo <= hi < 1.0:
        raise InvalidInputError(
            f"probability range must satisfy 0 < lo <= hi < 1, got [{lo}, {hi}]"
        )
    slopes = [1.0 / float(noise.pdf(noise.inv_cdf(p))) for p in (lo, hi)]
    return max(slopes)


# -- synthetic RKHS-classifier objectives ----------------------------------------


@dataclass(frozen=True, eq=False)
class SyntheticObjective:
    """A (pi*, f) pair on a finite domain, tied together by a noise model."""

    centers: np.ndarray   # (F, d)
    weights: np.ndarray   # (F,), normalised so ||pi*||_k = 1
    kernel: Kernel
    tau: float
    noise: NoiseModel
    domain: FiniteSpace
    pi_domain: np.ndarray  # pi* at every domain point
    f_domain: np.ndarray   # f at every domain point
    gamma_exact: float     # mean of pi* over the domain

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def argmin_index(self) -> int:
        return int(np.argmin(self.f_domain))

    @property
    def x_star(self) -> np.ndarray:
        return self.domain.points[self.argmin_index].copy()

    @property
    def f_star(self) -> float:
        return float(self.f_domain[self.argmin_index])

    @property
    def max_inverse_pi(self) -> float:
        """max_x 1 / pi*(x) over the domain (log-Lipschitz bookkeeping)."""
        return float(1.0 / np.min(self.pi_domain))

    def pi_star(self, x):
        out = (self.kernel(x, self.centers) @ self.weights).reshape(-1)
        return float(out[0]) if np.asarray(x).ndim <= 1 else out

    def f(self, x):
        pi = self.pi_star(x)
        return self.tau - self.noise.inv_cdf(pi)

    def ell_weights(self) -> np.ndarray:
        """Exact conditional density ell(x) = pi*(x) / sum(pi*) over the domain."""
        return self.pi_domain / float(self.pi_domain.sum())

    def observe(self, x, rng: np.random.Generator) -> float:
        idx = self.domain.index_of(x)
        return float(self.f_domain[idx] + self.noise.sample(rng))


def generate_synthetic(
    rng: np.random.Generator,
    kernel: Kernel,
    n_centers: int = 5,
    tau: float = 0.0,
    noise: NoiseModel | None = None,
    n_domain: int = 100,
    dim: int = 1,
) -> SyntheticObjective:
    """Draw a random classifier objective on a fresh finite domain."""
    if n_centers < 1:
        raise InvalidInputError(f"need at least one center, got {n_centers}")
    if n_domain < 2:
        raise InvalidInputError(f"need at least two domain points, got {n_domain}")
    noise = noise if noise is not None else GaussianNoise(sigma=0.1)

    centers = rng.uniform(0.0, 1.0, size=(n_centers, dim))
    weights = rng.uniform(0.0, 1.0, size=n_centers)
    while float(weights.sum()) <= 0.0:  # degenerate draw, resample
        weights = rng.uniform(0.0, 1.0, size=n_centers)
    Kc = kernel.gram(centers)
    nrm = math.sqrt(float(weights @ Kc @ weights))
    weights = weights / nrm

    domain = FiniteSpace(points=rng.uniform(0.0, 1.0, size=(n_domain, dim)))
    pi_domain = (kernel(domain.points, centers) @ weights).reshape(-1)
    f_domain = tau - np.asarray(noise.inv_cdf(pi_domain), dtype=float)
    gamma_exact = float(pi_domain.mean())
    return SyntheticObjective(
        centers=centers,
        weights=weights,
        kernel=kernel,
        tau=tau,
        noise=noise,
        domain=domain,
        pi_domain=pi_domain,
        f_domain=f_domain,
        gamma_exact=gamma_exact,
    )


# -- analytic test functions -----------------------------------------------------


def sphere(x) -> float:
    """Minimum 0 at the origin."""
    v = np.asarray(x, dtype=float).reshape(-1)
    return float(np.sum(v * v))


def rosenbrock(x) -> float:
    """Minimum 0 at (1, ..., 1)."""
    v = np.asarray(x, dtype=float).reshape(-1)
    return float(np.sum(100.0 * (v[1:] - v[:-1] ** 2) ** 2 + (1.0 - v[:-1]) ** 2))


_HARTMANN3_A = np.array(
    [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]]
)
_HARTMANN3_C = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN3_P = 1e-4 * np.array(
    [
        [3689.0, 1170.0, 2673.0],
        [4699.0, 4387.0, 7470.0],
        [1091.0, 8732.0, 5547.0],
        [381.0, 5743.0, 8828.0],
    ]
)


def hartmann3(x) -> float:
    """Four-peak exponential mixture on the unit cube; minimum -3.8627797873."""
    v = np.asarray(x, dtype=float).reshape(-1)
    inner = ((v - _HARTMANN3_P) ** 2 * _HARTMANN3_A).sum(axis=1)
    return -float((_HARTMANN3_C * np.exp(-inner)).sum())


def six_hump_camel(x) -> float:
    """Two global minima at (+-0.0898, -+0.7127); minimum -1.0316284535."""
    x1, x2 = np.asarray(x, dtype=float).reshape(-1)
    return float(
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (-4.0 + 4.0 * x2**2) * x2**2
    )


@dataclass(frozen=True, eq=False)
class AnalyticObjective:
    name: str
    dim: int
    box: BoxSpace
    minimum_value: float
    minimum_location: np.ndarray
    noise: NoiseModel | None = None

    def f(self, x) -> float:
        return _ANALYTIC_FUNCS[self.name](x)

    @property
    def f_star(self) -> float:
        return self.minimum_value

    @property
    def x_star(self) -> np.ndarray:
        return self.minimum_location.copy()

    def observe(self, x, rng: np.random.Generator) -> float:
        if not self.box.contains(x):
            raise InvalidInputError("query point lies outside the search box")
        y = self.f(x)
        if self.noise is not None:
            y += float(self.noise.sample(rng))
        return y


_ANALYTIC_FUNCS = {
    "sphere": sphere,
    "rosenbrock": rosenbrock,
    "hartmann3": hartmann3,
    "six_hump_camel": six_hump_camel,
}


def make_analytic(
    name: str, dim: int | None = None, noise: NoiseModel | None = None
) -> AnalyticObjective:
    """Build a named analytic objective with its standard box and known minimum."""
    if name == "sphere":
        d = dim or 2
        return AnalyticObjective(
            name=name,
            dim=d,
            box=BoxSpace(lower=np.full(d, -5.12), upper=np.full(d, 5.12)),
            minimum_value=0.0,
            minimum_location=np.zeros(d),
            noise=noise,
        )
    if name == "rosenbrock":
        d = dim or 2
        if d < 2:
            raise InvalidInputError("rosenbrock needs dimension >= 2")
        return AnalyticObjective(
            name=name,
            dim=d,
            box=BoxSpace(lower=np.full(d, -2.048), upper=np.full(d, 2.048)),
            minimum_value=0.0,
            minimum_location=np.ones(d),
            noise=noise,
        )
    if name == "hartmann3":
        if dim not in (None, 3):
            raise InvalidInputError("hartmann3 is defined in dimension 3")
        return AnalyticObjective(
            name=name,
            dim=3,
            box=BoxSpace(lower=np.zeros(3), upper=np.ones(3)),
            minimum_value=-3.8627797873326593,
            minimum_location=np.array(
                [0.11458887995407631, 0.5556488985763652, 0.852546979219297]
            ),
            noise=noise,
        )
    if name == "six_hump_camel":
        if dim not in (None, 2):
            raise InvalidInputError("six_hump_camel is defined in dimension 2")
        return AnalyticObjective(
            name=name,
            dim=2,
            box=BoxSpace(lower=np.array([-3.0, -2.0]), upper=np.array([3.0, 2.0])),
            minimum_value=-1.0316284534898772,
            minimum_location=np.array([0.08984200851509565, -0.7126564072397159]),
            noise=noise,
        )
    raise InvalidInputError(
        f"unknown analytic objective {name!r}; expected one of {sorted(_ANALYTIC_FUNCS)}"
    )
