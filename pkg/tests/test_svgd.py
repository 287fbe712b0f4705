"""SVGD transport: single-particle reduction, moment matching, repulsion,
determinism, and finite-mode batch sampling."""

import numpy as np
import pytest

from borekit.classifier import empty_classifier, fit_classifier
from borekit.errors import InvalidInputError
from borekit.kernels import Kernel
from borekit.spaces import BoxSpace, FiniteSpace
from borekit.svgd import (
    LogDensityTarget,
    ParticleSet,
    SvgdConfig,
    finite_batch_weights,
    median_bandwidth,
    posterior_log_target,
    propose_batch,
    run_svgd,
    svgd_direction,
    svgd_step,
)
from borekit.acquisition import bore_pp_select

STD_GAUSSIAN = LogDensityTarget(
    log_p=lambda x: -0.5 * float(np.sum(np.asarray(x) ** 2)),
    grad_log_p=lambda x: -np.asarray(x, dtype=float),
)


def two_mode_target():
    def parts(x):
        x = np.asarray(x, dtype=float)
        a = np.exp(-0.5 * np.sum((x - 2.0) ** 2))
        b = np.exp(-0.5 * np.sum((x + 2.0) ** 2))
        return a, b

    def log_p(x):
        a, b = parts(x)
        return float(np.log(0.5 * a + 0.5 * b))

    def grad_log_p(x):
        x = np.asarray(x, dtype=float)
        a, b = parts(x)
        return (-(x - 2.0) * a - (x + 2.0) * b) / (a + b)

    return LogDensityTarget(log_p=log_p, grad_log_p=grad_log_p)


class TestDirection:
    def test_single_particle_is_pure_score_gradient(self):
        # the repulsion term vanishes at the particle itself
        x = np.array([[0.7]])
        zeta = svgd_direction(x, STD_GAUSSIAN)
        np.testing.assert_allclose(zeta, [[-0.7]], atol=1e-15)

    def test_single_particle_run_equals_gradient_ascent(self):
        box = BoxSpace(lower=np.array([-5.0]), upper=np.array([5.0]))
        ps = ParticleSet(
            particles=np.array([[3.0]]), box=box, step_size=1e-2, decay=0.9,
            steps=200, step_rule="rmsprop",
        )
        out = run_svgd(ps, STD_GAUSSIAN)
        # replay: same normalised ascent without any kernel machinery
        x = np.array([[3.0]])
        sq = np.zeros_like(x)
        for _ in range(200):
            g = -x
            sq = 0.9 * sq + 0.1 * g**2
            x = box.project(x + 1e-2 * g / np.sqrt(sq + 1e-8))
        np.testing.assert_array_equal(out.particles, x)

    def test_non_finite_gradient_names_particle(self):
        bad = LogDensityTarget(
            log_p=lambda x: 0.0, grad_log_p=lambda x: np.array([np.nan])
        )
        ps = ParticleSet(
            particles=np.array([[0.0], [1.0]]),
            box=BoxSpace(lower=np.array([-2.0]), upper=np.array([2.0])),
        )
        with pytest.raises(InvalidInputError, match="particle 0"):
            svgd_step(ps, bad)


class TestMedianBandwidth:
    def test_single_particle_falls_back_to_one(self):
        assert median_bandwidth(np.array([[0.3]])) == 1.0

    def test_collapsed_particles_fall_back_to_one(self):
        assert median_bandwidth(np.array([[0.3], [0.3], [0.3]])) == 1.0

    def test_known_pair(self):
        p = np.array([[0.0], [1.0]])
        expected = np.sqrt(1.0 / (2.0 * np.log(3.0)))
        assert median_bandwidth(p) == pytest.approx(expected, abs=1e-12)


class TestMoments:
    def test_standard_gaussian_moments(self):
        rng = np.random.default_rng(0)
        box = BoxSpace(lower=np.array([-6.0]), upper=np.array([6.0]))
        ps = ParticleSet(
            particles=rng.uniform(-2, 2, size=(50, 1)), box=box,
            step_size=1e-3, decay=0.9, steps=1000,
        )
        out = run_svgd(ps, STD_GAUSSIAN)
        assert float(out.particles.mean()) == pytest.approx(0.0, abs=0.1)
        assert float(out.particles.var()) == pytest.approx(1.0, abs=0.15)

    def test_two_mode_target_keeps_both_modes(self):
        rng = np.random.default_rng(1)
        box = BoxSpace(lower=np.array([-6.0]), upper=np.array([6.0]))
        ps = ParticleSet(
            particles=rng.uniform(-4, 4, size=(50, 1)), box=box,
            step_size=1e-3, decay=0.9, steps=1000,
        )
        out = run_svgd(ps, two_mode_target())
        frac_left = float(np.mean(out.particles < 0))
        assert min(frac_left, 1.0 - frac_left) >= 0.25


class TestRepulsion:
    @staticmethod
    def pairwise(P):
        D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
        return D[np.triu_indices(len(P), 1)]

    def test_constant_target_mean_distance_non_decreasing(self):
        # plain field-proportional steps: repulsion separates particles
        flat = LogDensityTarget(
            log_p=lambda x: 0.0, grad_log_p=lambda x: np.zeros_like(np.asarray(x))
        )
        rng = np.random.default_rng(2)
        box = BoxSpace(lower=np.zeros(2), upper=np.ones(2))
        ps = ParticleSet(
            particles=box.sample_uniform(rng, 15), box=box,
            step_size=0.05, decay=1.0, steps=1, step_rule="plain",
        )
        mean_d = [float(self.pairwise(ps.particles).mean())]
        for _ in range(100):
            ps = svgd_step(ps, flat)
            mean_d.append(float(self.pairwise(ps.particles).mean()))
        assert all(b >= a - 1e-12 for a, b in zip(mean_d, mean_d[1:]))

    def test_empty_posterior_spreads_particles(self):
        # constant acquisition: only repulsion acts, so the closest pair ends
        # at least as far apart as it started.  Kept to interior dynamics:
        # the box clip can merge particles that pile up in a corner, which
        # the spread property cannot survive.
        post = empty_classifier(Kernel(lengthscales=(0.1,)), 2, 0.025)
        target = posterior_log_target(post, "ucb")
        box = BoxSpace(lower=np.zeros(2), upper=np.ones(2))
        for seed in range(6):
            rng = np.random.default_rng(seed)
            init = box.sample_uniform(rng, 12)
            ps = ParticleSet(
                particles=init.copy(), box=box, step_size=0.02, decay=1.0,
                steps=30, step_rule="plain",
            )
            out = run_svgd(ps, target)
            assert float(self.pairwise(out.particles).min()) >= float(
                self.pairwise(init).min()
            )


class TestTargets:
    def test_log_target_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, size=(6, 2))
        z = rng.integers(0, 2, size=6).astype(float)
        post = fit_classifier(Kernel(lengthscales=(0.3, 0.3)), X, z, 0.025, 1.0, 0.1)
        target = posterior_log_target(post, "ucb")
        h = 1e-6
        for _ in range(25):
            q = rng.uniform(0.05, 0.95, size=2)
            g = target.grad_log_p(q)
            fd = np.array(
                [
                    (target.log_p(q + h * e) - target.log_p(q - h * e)) / (2 * h)
                    for e in np.eye(2)
                ]
            )
            err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)
            assert err <= 1e-4


class TestProposeBatch:
    def test_rejects_non_positive_batch(self):
        post = empty_classifier(Kernel(), 1, 0.025)
        box = BoxSpace(lower=np.zeros(1), upper=np.ones(1))
        with pytest.raises(InvalidInputError):
            propose_batch(post, box, 0, SvgdConfig(), np.random.default_rng(0))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(0, 1, size=(5, 1))
        z = rng.integers(0, 2, size=5).astype(float)
        post = fit_classifier(Kernel(lengthscales=(0.2,)), X, z, 0.025, 1.0, 0.1)
        box = BoxSpace(lower=np.zeros(1), upper=np.ones(1))
        cfg = SvgdConfig(steps=50)
        a = propose_batch(post, box, 8, cfg, np.random.default_rng(42))
        b = propose_batch(post, box, 8, cfg, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_single_particle_matches_selector_ucb(self):
        # smooth, gently varying acquisition: the lone SVGD particle climbs
        # to the same quality as the multi-start selector
        X = np.array([[0.2], [0.5], [0.8]])
        z = np.array([0.0, 1.0, 0.0])
        post = fit_classifier(
            Kernel(lengthscales=(0.25,)), X, z, 0.1, fixed_beta=0.5
        )
        box = BoxSpace(lower=np.zeros(1), upper=np.ones(1))
        pick = bore_pp_select(post, box)
        prop = propose_batch(post, box, 1, SvgdConfig(), np.random.default_rng(6))
        assert abs(post.ucb(prop[0]) - post.ucb(pick)) <= 1e-3

    def test_finite_mode_samples_match_weights(self):
        rng = np.random.default_rng(7)
        space = FiniteSpace(points=rng.uniform(0, 1, size=(15, 1)))
        X = rng.uniform(0, 1, size=(6, 1))
        z = rng.integers(0, 2, size=6).astype(float)
        post = fit_classifier(
            Kernel(lengthscales=(0.1,)), X, z, 0.025, fixed_beta=0.3
        )
        weights = finite_batch_weights(post, space, "ucb")
        draws = propose_batch(
            post, space, 10_000, SvgdConfig(), np.random.default_rng(8)
        )
        counts = np.zeros(space.size)
        for row in draws:
            counts[space.index_of(row)] += 1
        freqs = counts / draws.shape[0]
        tv = 0.5 * float(np.abs(freqs - weights).sum())
        assert tv <= 0.02

    def test_uniform_weights_when_scores_all_clamp(self):
        post = empty_classifier(Kernel(lengthscales=(0.1,)), 1, 0.025, 1.0, 0.1)
        space = FiniteSpace(points=np.linspace(0, 1, 10)[:, None])
        weights = finite_batch_weights(post, space, "ucb")
        np.testing.assert_allclose(weights, 0.1, atol=1e-12)
