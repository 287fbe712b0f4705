"""Invariant and oracle battery behind the ``validate`` CLI subcommand.

Each check recomputes a library quantity through an independent route
(dense solves, finite differences, exhaustive scans, enumeration) and
compares.  Returns structured results so the CLI can print one line per
check and exit non-zero on any failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import labeling
from .acquisition import argmax_finite, expected_improvement, fit_gp, gp_ei
from .benchmarks import GaussianNoise, generate_synthetic
from .classifier import fit_classifier, sequential_information_gain
from .driver import ObjectiveConfig, RunConfig, run_sequential
from .kernels import (
    MATERN52,
    RATIONAL_QUADRATIC,
    SQUARED_EXPONENTIAL,
    Kernel,
    rkhs_norm_finite,
)
from .spaces import FiniteSpace


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check(name: str, fn: Callable[[], str]) -> CheckResult:
    try:
        return CheckResult(name, True, fn())
    except AssertionError as exc:
        return CheckResult(name, False, str(exc))


def check_kernel_symmetry_psd(n_points: int = 30) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(11)
        worst = 0.0
        for family in (SQUARED_EXPONENTIAL, MATERN52, RATIONAL_QUADRATIC):
            k = Kernel(family=family, lengthscales=(0.3, 0.7), output_scale=1.3)
            X = rng.uniform(-1, 1, size=(n_points, 2))
            K = k.gram(X)
            assert np.allclose(K, K.T), f"{family}: Gram not symmetric"
            floor = -1e-10 * np.trace(K)
            low = float(np.linalg.eigvalsh(K)[0])
            assert low >= floor, f"{family}: min eigenvalue {low:.3e} < {floor:.3e}"
            worst = min(worst, low)
        return f"min eigenvalue {worst:.2e}"

    return _check("kernel symmetry and positive semidefiniteness", body)


def check_kernel_gradients(n_pairs: int = 50) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(12)
        h, worst = 1e-5, 0.0
        for family in (SQUARED_EXPONENTIAL, MATERN52, RATIONAL_QUADRATIC):
            k = Kernel(family=family, lengthscales=(0.5,), output_scale=1.0)
            for _ in range(n_pairs):
                x, y = rng.uniform(-1, 1, size=(2, 3))
                g = k.grad(x, y)[0]
                fd = np.array(
                    [
                        (k(x + h * e, y)[0, 0] - k(x - h * e, y)[0, 0]) / (2 * h)
                        for e in np.eye(3)
                    ]
                )
                err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-10)
                worst = max(worst, err)
        assert worst <= 1e-5, f"gradient relative error {worst:.2e} > 1e-5"
        return f"max relative error {worst:.2e}"

    return _check("kernel gradients match finite differences", body)


def check_rkhs_norm(n_points: int = 5) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(13)
        k = Kernel(lengthscales=(0.4,))
        X = rng.uniform(0, 1, size=(n_points, 1))
        alpha = rng.uniform(0.2, 1.0, size=n_points)
        K = k.gram(X)
        expected = math.sqrt(float(alpha @ K @ alpha))
        got = rkhs_norm_finite(k, X, K @ alpha)
        assert abs(got - expected) <= 1e-8, f"|{got} - {expected}| > 1e-8"
        return f"difference {abs(got - expected):.2e}"

    return _check("finite-domain RKHS norm matches expansion weights", body)


def check_classifier_oracle(n_datasets: int = 10, max_n: int = 10) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(14)
        k = Kernel(lengthscales=(0.3,))
        worst = 0.0
        for _ in range(n_datasets):
            n = int(rng.integers(1, max_n + 1))
            d = int(rng.integers(1, 4))
            kd = Kernel(lengthscales=(0.3,) * d)
            X = rng.uniform(0, 1, size=(n, d))
            z = rng.integers(0, 2, size=n).astype(float)
            lam = 0.025
            post = fit_classifier(kd, X, z, lam)
            Q = rng.uniform(0, 1, size=(7, d))
            K = kd.gram(X)
            A = K + lam * np.eye(n)
            kq = kd(Q, X)
            mean_oracle = kq @ np.linalg.solve(A, z)
            var_oracle = 1.0 - np.sum(kq * np.linalg.solve(A, kq.T).T, axis=1)
            worst = max(worst, float(np.max(np.abs(post.mean(Q) - mean_oracle))))
            worst = max(
                worst,
                float(np.max(np.abs(post.stddev(Q) - np.sqrt(np.clip(var_oracle, 0, None))))),
            )
        assert worst <= 1e-10, f"max deviation {worst:.2e} > 1e-10"
        return f"max deviation from dense solve {worst:.2e}"

    return _check("classifier matches dense normal-equations oracle", body)


def check_information_gain_identity(n_datasets: int = 5, n: int = 15) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(15)
        k = Kernel(lengthscales=(0.2,))
        worst = 0.0
        for _ in range(n_datasets):
            X = rng.uniform(0, 1, size=(n, 1))
            lam = 0.025
            post = fit_classifier(k, X, np.zeros(n), lam)
            det_form = post.information_gain()
            seq_form = sequential_information_gain(k, X, lam)
            worst = max(worst, abs(det_form - seq_form))
        assert worst <= 1e-8, f"identity gap {worst:.2e} > 1e-8"
        return f"max |determinant - sequential| {worst:.2e}"

    return _check("information-gain determinant/sequential identity", body)


def check_labeling() -> CheckResult:
    def body() -> str:
        ys = [3.0, 1.0, 4.0, 2.0]
        assert labeling.quantile(ys, 0.25) == 1.0
        assert labeling.quantile(ys, 0.5) == 2.0
        assert labeling.empirical_cdf([1, 2, 3, 4], 2.5) == 0.5
        assert np.array_equal(labeling.labels(ys, 1.0), [0, 1, 0, 0])
        rng = np.random.default_rng(16)
        for _ in range(50):
            obs = rng.normal(size=int(rng.integers(1, 40)))
            gamma = float(rng.uniform(0.05, 0.95))
            tau = labeling.quantile(obs, gamma)
            assert tau in obs, "quantile must be an observed value"
            z = labeling.labels(obs, tau)
            assert z.sum() >= math.ceil(gamma * obs.size), "too few positive labels"
        return "quantile and label contracts hold"

    return _check("labeling quantile and label generation", body)


def check_argmax_argmin_match(n_seeds: int = 25) -> CheckResult:
    def body() -> str:
        k = Kernel(lengthscales=(0.1,))
        for seed in range(n_seeds):
            obj = generate_synthetic(
                np.random.default_rng(seed), k, noise=GaussianNoise(sigma=0.1)
            )
            assert int(np.argmax(obj.pi_domain)) == int(np.argmin(obj.f_domain)), (
                f"seed {seed}: argmax pi* != argmin f"
            )
        return f"{n_seeds} objectives, exact index match"

    return _check("classifier maximiser equals objective minimiser", body)


def check_selector_scan(n_trials: int = 50) -> CheckResult:
    def body() -> str:
        rng = np.random.default_rng(17)
        space = FiniteSpace(points=rng.uniform(0, 1, size=(40, 1)))
        for _ in range(n_trials):
            scores = rng.normal(size=40)
            pick = argmax_finite(lambda X: scores, space)
            best = space.points[int(np.argmax(scores))]
            assert np.array_equal(pick, best), "selector disagrees with scan"
        return f"{n_trials} random score vectors"

    return _check("finite selectors agree with exhaustive scan", body)


def check_expected_improvement() -> CheckResult:
    def body() -> str:
        assert expected_improvement(0.3, 0.0, tau=1.0) == 0.0, (
            "EI must be 0 where sigma = 0"
        )
        at_par = expected_improvement(0.0, 1.0, tau=0.0)
        assert abs(at_par - 1.0 / math.sqrt(2 * math.pi)) <= 1e-12, (
            "EI at tau = mu, sigma = 1 must equal the standard normal density at 0"
        )
        hopeless = expected_improvement(0.0, 0.1, tau=-10.0)
        assert hopeless <= 1e-12, "EI for a hopeless improvement must vanish"
        k = Kernel(lengthscales=(0.5,))
        gp = fit_gp(k, [[0.0]], [0.0], lam=0.01)
        assert gp_ei(gp, [10.0], tau=-10.0) <= 1e-12
        return "closed-form conventions hold"

    return _check("expected improvement conventions", body)


def check_run_invariants(budget: int = 25) -> CheckResult:
    def body() -> str:
        config = RunConfig(
            algorithm="bore_pp",
            budget=budget,
            fixed_tau=0.0,
            lam=0.025,
            delta=0.1,
            objective=ObjectiveConfig(kind="synthetic"),
            name="selfcheck",
        )
        result = run_sequential(config, seed=3)
        recs = result.records
        total = 0.0
        for rec in recs:
            total += rec.instant_regret
            assert abs(rec.cumulative_regret - total) <= 1e-9, "R_t bookkeeping broke"
        simples = [r.simple_regret for r in recs]
        assert all(b <= a + 1e-12 for a, b in zip(simples, simples[1:])), (
            "simple regret increased"
        )
        sig_sum = sum(float(r.sigma_at_query[0]) for r in recs)
        ig = recs[-1].info_gain
        bound = math.sqrt(4 * (budget + 2) * ig)
        assert sig_sum <= bound, f"variance-sum bound violated: {sig_sum} > {bound}"
        return f"variance-sum {sig_sum:.3f} <= bound {bound:.3f}"

    return _check("run bookkeeping and variance-sum bound", body)


def run_all(fast: bool = False) -> list[CheckResult]:
    scale = 1 if fast else 2
    return [
        check_kernel_symmetry_psd(n_points=20 * scale),
        check_kernel_gradients(n_pairs=25 * scale),
        check_rkhs_norm(),
        check_classifier_oracle(n_datasets=5 * scale, max_n=8 if fast else 10),
        check_information_gain_identity(n_datasets=3 * scale, n=15),
        check_labeling(),
        check_argmax_argmin_match(n_seeds=10 * scale),
        check_selector_scan(n_trials=25 * scale),
        check_expected_improvement(),
        check_run_invariants(budget=15 * scale),
    ]
