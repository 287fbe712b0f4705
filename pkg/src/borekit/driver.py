"""Sequential and batch optimisation loops with regret and bound accounting.

The sequential loop follows the quantile-relabelling scheme: at every
iteration the threshold tau is the gamma-quantile of all observations so
far (or a fixed constant in the idealised mode), every past observation is
relabelled against it, the classifier is refit, a query point is selected
by the configured acquisition, and a noisy observation is collected.  The
batch loop replaces single-point selection with an M-point proposal and
refits once per outer iteration.

Every iteration is logged as a TrialRecord carrying the query points,
instant/cumulative/simple regret against the known optimum, the confidence
width and predictive deviations of the selecting surrogate, the realised
information gain, and (for synthetic finite-domain runs) per-iteration
instant bound values plus the distributional regret and KL divergence of
the batch proposal distribution against the ideal conditional density.

Two cumulative bound evaluators mirror the regret guarantees they check:

    thm2_bound = L_eps * beta_T * (sqrt(4 (T+2) IG_T) + sum_t sigma_{t-1}(x*))
    thm3_bound = 4 * L_eps * beta_T * sqrt((T+2) IG_T)

with the intractable maximum information gain replaced by the realised
information gain of the actual query sequence (a lower bound on it), which
is also how the per-run bound columns are reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import labeling
from .acquisition import (
    argmax_finite,
    bore_pp_select,
    bore_select,
    empty_gp,
    gp_ei_select,
    gp_ucb_select,
)
from .benchmarks import (
    CauchyNoise,
    GaussianNoise,
    NoiseModel,
    StudentTNoise,
    SyntheticObjective,
    generate_synthetic,
    lipschitz_of_inverse_cdf,
    make_analytic,
)
from .classifier import (
    empty_classifier,
    fit_feature_map_classifier,
    sample_feature_map,
)
from .errors import InvalidInputError
from .kernels import Kernel, as_points, rkhs_norm_finite
from .spaces import FiniteSpace
from .svgd import SvgdConfig, finite_batch_weights, propose_batch

ALGORITHMS = ("bore_pls", "bore_pp", "gp_ucb", "gp_ei", "random")

# Probability-range padding when computing the inverse-CDF Lipschitz
# constant over the realised classifier range.
_PI_RANGE_PAD = 0.01
_PI_RANGE_FLOOR = 1e-9


@dataclass(frozen=True)
class ObjectiveConfig:
    """Which objective a run optimises and how observations are corrupted."""

    kind: str = "synthetic"  # or "analytic"
    # synthetic settings
    n_centers: int = 5
    n_domain: int = 100
    dim: int = 1
    tau: float = 0.0
    # analytic settings
    name: str = "rosenbrock"
    noiseless: bool = True
    # noise model (synthetic always; analytic when not noiseless)
    noise_family: str = "gaussian"  # gaussian | student_t | cauchy
    noise_scale: float = 0.1
    noise_dof: float = 3.0

    def build_noise(self) -> NoiseModel:
        if self.noise_family == "gaussian":
            return GaussianNoise(sigma=self.noise_scale)
        if self.noise_family == "student_t":
            return StudentTNoise(dof=self.noise_dof, scale=self.noise_scale)
        if self.noise_family == "cauchy":
            return CauchyNoise(scale=self.noise_scale)
        raise InvalidInputError(
            f"objective.noise_family: unknown family {self.noise_family!r}"
        )


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one experiment variant."""

    algorithm: str = "bore_pp"
    budget: int = 100
    batch_size: int = 1
    gamma: float = 0.25
    fixed_tau: float | None = None
    lam: float = 0.025
    delta: float = 0.1
    norm_bound: float | None = None
    classifier_beta: float | None = None
    gp_beta: float | None = None
    classifier_backend: str = "kernel"  # or "feature_map"
    n_features: int = 300
    init_points: int = 0
    seeds: tuple[int, ...] = (0,)
    kernel: Kernel = field(default_factory=lambda: Kernel(lengthscales=(0.1,)))
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    svgd: SvgdConfig = field(default_factory=SvgdConfig)
    batch_argmax: bool = False
    record_timings: bool = False
    name: str = "run"

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(
                f"algorithm: {self.algorithm!r} is not one of {ALGORITHMS}"
            )
        if self.budget < 1:
            raise InvalidInputError(f"budget: must be >= 1, got {self.budget}")
        if self.batch_size < 1:
            raise InvalidInputError(f"batch_size: must be >= 1, got {self.batch_size}")
        if self.batch_size > 1 and self.algorithm not in ("bore_pls", "bore_pp", "random"):
            raise InvalidInputError(
                f"batch_size: batches require a classifier-based or random "
                f"algorithm, not {self.algorithm!r}"
            )
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError(f"gamma: must lie in (0, 1), got {self.gamma}")
        if self.lam <= 0:
            raise InvalidInputError(f"lam: must be positive, got {self.lam}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError(f"delta: must lie in (0, 1), got {self.delta}")
        if self.classifier_backend not in ("kernel", "feature_map"):
            raise InvalidInputError(
                f"classifier_backend: unknown backend {self.classifier_backend!r}"
            )
        if self.n_features < 1:
            raise InvalidInputError(f"n_features: must be >= 1, got {self.n_features}")
        if self.init_points < 0:
            raise InvalidInputError(f"init_points: must be >= 0, got {self.init_points}")
        if not self.seeds:
            raise InvalidInputError("seeds: at least one seed is required")
        if self.objective.kind not in ("synthetic", "analytic"):
            raise InvalidInputError(
                f"objective.kind: unknown kind {self.objective.kind!r}"
            )
        if self.objective.kind == "analytic" and self.algorithm == "gp_ucb":
            if self.gp_beta is None:
                raise InvalidInputError(
                    "gp_beta: the theory schedule needs a finite synthetic domain; "
                    "set a constant gp_beta for analytic objectives"
                )
        self.objective.build_noise()


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """One outer iteration of a run."""

    iteration: int
    points: np.ndarray        # (M, d)
    observations: np.ndarray  # (M,)
    tau: float | None
    labels: np.ndarray | None  # labels used by the selecting fit (pre-query data)
    instant_regret: float
    cumulative_regret: float
    simple_regret: float
    beta: float | None = None
    sigma_at_query: np.ndarray | None = None
    sigma_at_optimum: float | None = None
    info_gain: float | None = None
    thm2_instant: float | None = None
    thm3_instant: float | None = None
    dist_regret: float | None = None
    kl_estimate: float | None = None
    n_duplicates: int = 0
    wall_ms: float | None = None


@dataclass(eq=False)
class RunResult:
    """All records of a run plus the end-of-run quantities the bounds need."""

    config: RunConfig
    seed: int
    records: list[TrialRecord]
    f_star: float
    x_star: np.ndarray
    init_inputs: np.ndarray
    init_observations: np.ndarray
    l_eps: float | None = None
    max_inverse_pi: float | None = None
    beta_final: float | None = None
    info_gain_final: float | None = None
    sigma_star_sum: float | None = None
    objective_norm: float | None = None  # RKHS norm of f (GP-UCB schedule)

    @property
    def cumulative_regret(self) -> float:
        return self.records[-1].cumulative_regret if self.records else 0.0

    @property
    def simple_regret(self) -> float:
        return self.records[-1].simple_regret if self.records else math.inf


# -- bound evaluators ----------------------------------------------------------


def thm2_bound(
    records: list[TrialRecord],
    l_eps: float,
    beta_final: float,
    sigma_star_sum: float,
) -> float:
    """Cumulative bound for the greedy classifier policy (realised-IG form)."""
    if not records:
        return 0.0
    ig = records[-1].info_gain or 0.0
    T = len(records)
    return l_eps * beta_final * (math.sqrt(4.0 * (T + 2) * ig) + sigma_star_sum)


def thm3_bound(records: list[TrialRecord], l_eps: float, beta_final: float) -> float:
    """Cumulative bound for the confidence-bound policy (realised-IG form)."""
    if not records:
        return 0.0
    ig = records[-1].info_gain or 0.0
    T = len(records)
    return 4.0 * l_eps * beta_final * math.sqrt((T + 2) * ig)


def evaluate_bounds(result: RunResult) -> dict[str, float | None]:
    """Cumulative bound values (greedy and confidence-bound policies)
    for a finished synthetic run, keyed like the CSV bound columns."""
    if result.l_eps is None or result.beta_final is None:
        return {"thm2": None, "thm3": None}
    thm2 = None
    if result.sigma_star_sum is not None:
        thm2 = thm2_bound(
            result.records, result.l_eps, result.beta_final, result.sigma_star_sum
        )
    return {
        "thm2": thm2,
        "thm3": thm3_bound(result.records, result.l_eps, result.beta_final),
    }


def distributional_regret(
    p_hat,
    objective: SyntheticObjective,
    tau: float | None = None,
) -> tuple[float, float]:
    """Distributional regret and KL of a proposal against the ideal density.

    ``p_hat`` is either a probability vector over the finite domain or an
    array of proposal points (rows must be domain members), which is turned
    into an empirical histogram.  ``tau`` defaults to the objective's own
    threshold; a different value rebuilds the ideal density for it.
    """
    if tau is None or tau == objective.tau:
        ell = objective.ell_weights()
    else:
        mass = np.asarray(objective.noise.cdf(tau - objective.f_domain), dtype=float)
        total = float(mass.sum())
        if total <= 0.0:
            raise InvalidInputError("ideal density has zero mass at this threshold")
        ell = mass / total

    arr = np.asarray(p_hat, dtype=float)
    n = objective.domain.size
    if arr.ndim == 1 and arr.size == n and not np.any(arr < 0):
        weights = arr / float(arr.sum())
    else:
        pts = as_points(p_hat)
        weights = np.zeros(n)
        for row in pts:
            weights[objective.domain.index_of(row)] += 1.0
        weights /= float(pts.shape[0])

    f = objective.f_domain
    r_tilde = float(weights @ f - ell @ f)
    support = weights > 0.0
    if np.any(ell[support] <= 0.0):
        raise InvalidInputError("proposal puts mass where the ideal density has none")
    kl = float(np.sum(weights[support] * np.log(weights[support] / ell[support])))
    return r_tilde, kl


# -- run loops -------------------------------------------------------------------


def _build_objective(config: RunConfig, rng: np.random.Generator):
    oc = config.objective
    if oc.kind == "synthetic":
        obj = generate_synthetic(
            rng,
            kernel=config.kernel,
            n_centers=oc.n_centers,
            tau=oc.tau,
            noise=oc.build_noise(),
            n_domain=oc.n_domain,
            dim=oc.dim,
        )
        return obj, obj.domain
    noise = None if oc.noiseless else oc.build_noise()
    obj = make_analytic(oc.name, dim=oc.dim if oc.dim > 1 else None, noise=noise)
    return obj, obj.box


def _true_value(objective, x) -> float:
    if isinstance(objective, SyntheticObjective):
        return float(objective.f_domain[objective.domain.index_of(x)])
    return float(objective.f(x))


def _pi_range_lipschitz(objective: SyntheticObjective) -> float:
    lo = max(float(objective.pi_domain.min()) - _PI_RANGE_PAD, _PI_RANGE_FLOOR)
    hi = min(float(objective.pi_domain.max()) + _PI_RANGE_PAD, 1.0 - _PI_RANGE_FLOOR)
    return lipschitz_of_inverse_cdf(objective.noise, lo, hi)


class _SurrogateState:
    """Mutable per-run surrogate bookkeeping shared by both loops."""

    def __init__(self, config: RunConfig, dim: int, norm_bound: float,
                 rng: np.random.Generator):
        self.config = config
        self.kind = (
            "classifier"
            if config.algorithm in ("bore_pls", "bore_pp")
            else "gp"
            if config.algorithm in ("gp_ucb", "gp_ei")
            else "none"
        )
        self.backend = config.classifier_backend
        self.inputs: list[np.ndarray] = []
        self.observations: list[float] = []
        if self.kind == "classifier" and self.backend == "feature_map":
            self.freqs = sample_feature_map(config.kernel, config.n_features, rng, dim)
            self.post = fit_feature_map_classifier(
                config.kernel, self.freqs, [], [], config.lam,
                norm_bound, config.delta, config.classifier_beta,
            )
        elif self.kind == "classifier":
            self.post = empty_classifier(
                config.kernel, dim, config.lam, norm_bound, config.delta,
                config.classifier_beta,
            )
        elif self.kind == "gp":
            self.post = empty_gp(config.kernel, dim, config.lam)
        else:
            self.post = None

    def current_tau_and_labels(self) -> tuple[float | None, np.ndarray | None]:
        cfg = self.config
        if not self.observations:
            return (cfg.fixed_tau, None)
        if cfg.fixed_tau is not None:
            tau = cfg.fixed_tau
        else:
            tau = labeling.quantile(self.observations, cfg.gamma)
        return tau, labeling.labels(self.observations, tau)

    def refresh(self, tau: float | None, z: np.ndarray | None) -> None:
        """Bring the surrogate up to date with the full relabelled history."""
        if self.kind == "none":
            return
        if self.kind == "gp":
            while self.post.n_observations < len(self.inputs):
                i = self.post.n_observations
                self.post = self.post.extend(self.inputs[i], self.observations[i])
            return
        if z is None:
            return
        if self.backend == "feature_map":
            self.post = fit_feature_map_classifier(
                self.config.kernel, self.freqs,
                np.vstack(self.inputs), z, self.config.lam,
                self.post.norm_bound, self.config.delta,
                self.config.classifier_beta,
            )
            return
        while self.post.n_observations < len(self.inputs):
            i = self.post.n_observations
            self.post = self.post.extend(self.inputs[i], z[: i + 1])
        if not np.array_equal(self.post.targets, z):
            self.post = self.post.with_labels(z)

    def add(self, x: np.ndarray, y: float) -> None:
        self.inputs.append(np.asarray(x, dtype=float).reshape(-1))
        self.observations.append(float(y))

    def information_gain_now(self) -> float | None:
        """Realised IG with every collected input absorbed.

        The information gain depends on inputs only; pending points are
        absorbed with labels from the post-observation threshold, which the
        next iteration's refresh re-derives anyway.
        """
        if self.kind == "none":
            return None
        if self.kind == "gp":
            self.refresh(None, None)
            return self.post.information_gain()
        tau, z = self.current_tau_and_labels()
        if z is None:
            return self.post.information_gain()
        self.refresh(tau, z)
        return self.post.information_gain()


def _select(state: _SurrogateState, space, config: RunConfig, beta_gp: float | None,
            random_order: np.ndarray | None, rng: np.random.Generator,
            iteration: int) -> np.ndarray:
    alg = config.algorithm
    if alg == "bore_pls":
        return bore_select(state.post, space)
    if alg == "bore_pp":
        return bore_pp_select(state.post, space)
    if alg == "gp_ucb":
        return gp_ucb_select(state.post, space, beta_gp)
    if alg == "gp_ei":
        if not state.observations:
            if isinstance(space, FiniteSpace):
                return argmax_finite(lambda X: np.zeros(space.size), space)
            return 0.5 * (space.lower + space.upper)
        tau_ei = min(state.observations)
        return gp_ei_select(state.post, space, tau_ei)
    # random search: without replacement on finite domains (cycling if
    # exhausted), uniform on boxes
    if isinstance(space, FiniteSpace):
        idx = int(random_order[(iteration - 1) % space.size])
        return space.points[idx].copy()
    return space.sample_uniform(rng, 1)[0]


def run_sequential(config: RunConfig, seed: int | None = None) -> RunResult:
    """One-point-per-iteration optimisation loop."""
    if config.batch_size != 1:
        raise InvalidInputError("run_sequential requires batch_size = 1")
    return _run(config, seed)


def run_batch(config: RunConfig, seed: int | None = None) -> RunResult:
    """M-points-per-iteration loop; the surrogate refits once per iteration."""
    return _run(config, seed)


def _run(config: RunConfig, seed: int | None) -> RunResult:
    config.validate()
    run_seed = int(seed if seed is not None else config.seeds[0])
    obj_rng, noise_rng, algo_rng = np.random.default_rng(run_seed).spawn(3)

    objective, space = _build_objective(config, obj_rng)
    dim = space.dim
    synthetic = isinstance(objective, SyntheticObjective)

    norm_bound = config.norm_bound
    if norm_bound is None:
        norm_bound = 1.0  # synthetic classifiers are normalised to unit RKHS norm
    state = _SurrogateState(config, dim, norm_bound, algo_rng)

    l_eps = _pi_range_lipschitz(objective) if synthetic else None
    objective_norm = None
    if config.algorithm == "gp_ucb" and config.gp_beta is None:
        objective_norm = rkhs_norm_finite(
            config.kernel, objective.domain.points, objective.f_domain
        )

    random_order = None
    if config.algorithm == "random" and isinstance(space, FiniteSpace):
        random_order = algo_rng.permutation(space.size)

    f_star = objective.f_star
    x_star = objective.x_star

    # initial design: uniform draws observed before the loop
    init_inputs = np.zeros((0, dim))
    init_obs = np.zeros(0)
    if config.init_points > 0:
        if isinstance(space, FiniteSpace):
            idx = algo_rng.choice(space.size, size=config.init_points, replace=False)
            init_inputs = space.points[idx].copy()
        else:
            init_inputs = space.sample_uniform(algo_rng, config.init_points)
        init_obs = np.array(
            [objective.observe(x, noise_rng) for x in init_inputs]
        )
        for x, y in zip(init_inputs, init_obs):
            state.add(x, y)

    simple = math.inf
    for x in init_inputs:
        simple = min(simple, _true_value(objective, x) - f_star)

    records: list[TrialRecord] = []
    cumulative = 0.0
    sigma_star_sum = 0.0 if synthetic else None

    for t in range(1, config.budget + 1):
        t_start = time.perf_counter()
        tau, z = state.current_tau_and_labels()
        state.refresh(tau, z)
        post = state.post

        beta_gp = None
        if config.algorithm == "gp_ucb":
            beta_gp = (
                config.gp_beta
                if config.gp_beta is not None
                else post.beta_schedule(objective_norm, config.delta)
            )

        # -- propose this iteration's query points
        dist_regret = kl_estimate = None
        if config.batch_size == 1:
            points = as_points(
                _select(state, space, config, beta_gp, random_order, algo_rng, t)
            )
        elif config.algorithm == "random":
            if isinstance(space, FiniteSpace):
                idx = algo_rng.choice(space.size, size=config.batch_size, replace=True)
                points = space.points[idx].copy()
            else:
                points = space.sample_uniform(algo_rng, config.batch_size)
        else:
            score = "ucb" if config.algorithm == "bore_pp" else "mean"
            if config.batch_argmax:
                one = as_points(_select(state, space, config, beta_gp, None, algo_rng, t))
                points = np.repeat(one, config.batch_size, axis=0)
            else:
                points = propose_batch(
                    post, space, config.batch_size, config.svgd, algo_rng, score
                )
            if synthetic and isinstance(space, FiniteSpace):
                weights = finite_batch_weights(post, space, score)
                dist_regret, kl_estimate = distributional_regret(weights, objective)

        # -- surrogate statistics of the selecting posterior
        beta_val = sigma_q = sigma_star = None
        if state.kind == "classifier":
            beta_val = post.beta()
            sigma_q = np.atleast_1d(post.stddev(points))
            if synthetic:
                sigma_star = float(post.stddev(x_star))
        elif state.kind == "gp":
            beta_val = beta_gp
            sigma_q = np.atleast_1d(post.stddev(points))
            if synthetic:
                sigma_star = float(post.stddev(x_star))
        if sigma_star is not None:
            sigma_star_sum += sigma_star

        # -- observe
        ys = np.array([objective.observe(x, noise_rng) for x in points])
        for x, y in zip(points, ys):
            state.add(x, y)

        regrets = np.array([_true_value(objective, x) - f_star for x in points])
        instant = float(regrets.mean())
        cumulative += instant
        simple = min(simple, float(regrets.min()))

        thm2_i = thm3_i = None
        if synthetic and config.batch_size == 1 and sigma_q is not None:
            if config.algorithm == "bore_pls" and sigma_star is not None:
                thm2_i = l_eps * beta_val * (float(sigma_q[0]) + sigma_star)
            if config.algorithm == "bore_pp":
                thm3_i = 2.0 * l_eps * beta_val * float(sigma_q[0])

        info_gain = state.information_gain_now()
        uniq = np.unique(points, axis=0).shape[0]
        wall_ms = None
        if config.record_timings:
            wall_ms = (time.perf_counter() - t_start) * 1e3

        records.append(
            TrialRecord(
                iteration=t,
                points=points,
                observations=ys,
                tau=tau,
                labels=z,
                instant_regret=instant,
                cumulative_regret=cumulative,
                simple_regret=simple,
                beta=beta_val,
                sigma_at_query=sigma_q,
                sigma_at_optimum=sigma_star,
                info_gain=info_gain,
                thm2_instant=thm2_i,
                thm3_instant=thm3_i,
                dist_regret=dist_regret,
                kl_estimate=kl_estimate,
                n_duplicates=points.shape[0] - uniq,
                wall_ms=wall_ms,
            )
        )

    beta_final = None
    if state.kind == "classifier":
        tau, z = state.current_tau_and_labels()
        state.refresh(tau, z)
        beta_final = state.post.beta()
    elif state.kind == "gp":
        state.refresh(None, None)
        if config.algorithm == "gp_ucb":
            beta_final = (
                config.gp_beta
                if config.gp_beta is not None
                else state.post.beta_schedule(objective_norm, config.delta)
            )
    info_gain_final = records[-1].info_gain if records else None

    return RunResult(
        config=config,
        seed=run_seed,
        records=records,
        f_star=f_star,
        x_star=np.atleast_1d(x_star),
        init_inputs=init_inputs,
        init_observations=init_obs,
        l_eps=l_eps,
        max_inverse_pi=objective.max_inverse_pi if synthetic else None,
        beta_final=beta_final,
        info_gain_final=info_gain_final,
        sigma_star_sum=sigma_star_sum,
        objective_norm=objective_norm,
    )
