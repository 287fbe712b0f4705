"""Kernel evaluation, Gram matrices, gradients and finite RKHS norms."""

import math

import numpy as np
import pytest

from borekit.errors import InvalidInputError, NumericalError
from borekit.kernels import (
    MATERN52,
    RATIONAL_QUADRATIC,
    SQUARED_EXPONENTIAL,
    Kernel,
    chol_gram,
    eval_kernel,
    eval_kernel_grad,
    rkhs_norm_finite,
)

FAMILIES = (SQUARED_EXPONENTIAL, MATERN52, RATIONAL_QUADRATIC)


class TestEval:
    def test_same_point_returns_output_scale(self):
        for family in FAMILIES:
            k = Kernel(family=family, lengthscales=(0.1,), output_scale=1.0)
            assert eval_kernel(k, 0.3, 0.3) == pytest.approx(1.0, abs=1e-15)
            k2 = Kernel(family=family, lengthscales=(0.1,), output_scale=2.5)
            assert eval_kernel(k2, 0.3, 0.3) == pytest.approx(2.5, abs=1e-14)

    def test_squared_exponential_closed_form(self):
        k = Kernel(lengthscales=(0.1,))
        # exp(-d^2 / (2 l^2)) with d = 0.1, l = 0.1
        assert eval_kernel(k, 0.0, 0.1) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_decay_to_zero_at_twenty_lengthscales(self):
        k = Kernel(lengthscales=(0.1,))
        assert eval_kernel(k, 0.0, 2.0) <= 1e-12

    def test_symmetry_random_pairs(self):
        rng = np.random.default_rng(0)
        for family in FAMILIES:
            k = Kernel(family=family, lengthscales=(0.4, 0.8), output_scale=1.7)
            for _ in range(50):
                x, y = rng.normal(size=(2, 2))
                assert eval_kernel(k, x, y) == pytest.approx(
                    eval_kernel(k, y, x), abs=1e-15
                )

    def test_dimension_mismatch_rejected(self):
        k = Kernel(lengthscales=(0.1, 0.2))
        with pytest.raises(InvalidInputError):
            eval_kernel(k, [0.1], [0.2])
        with pytest.raises(InvalidInputError):
            k([[0.0, 0.0]], [[0.0, 0.0, 0.0]])


class TestGram:
    def test_entries_match_pairwise_eval(self):
        rng = np.random.default_rng(1)
        k = Kernel(family=MATERN52, lengthscales=(0.5,))
        X = rng.uniform(-1, 1, size=(8, 1))
        K = k.gram(X)
        for i in range(8):
            for j in range(8):
                assert K[i, j] == pytest.approx(
                    eval_kernel(k, X[i], X[j]), abs=1e-14
                )

    def test_positive_semidefinite_fifty_points(self):
        rng = np.random.default_rng(2)
        for family in FAMILIES:
            k = Kernel(family=family, lengthscales=(0.2, 0.3, 0.4))
            X = rng.uniform(-1, 1, size=(50, 3))
            K = k.gram(X)
            assert np.linalg.eigvalsh(K)[0] >= -1e-10 * np.trace(K)

    def test_factorisation_failure_raises_numerical_error(self):
        bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(NumericalError):
            chol_gram(bad)


class TestGradients:
    def test_zero_at_coincident_points(self):
        for family in FAMILIES:
            k = Kernel(family=family, lengthscales=(0.3, 0.3))
            g = eval_kernel_grad(k, [0.4, -0.2], [0.4, -0.2])
            np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_squared_exponential_analytic_value(self):
        k = Kernel(lengthscales=(1.0,))
        # -(x - x2) / l^2 * k = -exp(-0.5)
        g = eval_kernel_grad(k, [1.0], [0.0])
        assert g[0] == pytest.approx(-math.exp(-0.5), abs=1e-12)

    def test_finite_differences_hundred_random_pairs(self):
        rng = np.random.default_rng(3)
        h = 1e-5
        for family in FAMILIES:
            k = Kernel(family=family, lengthscales=(0.6,), output_scale=1.2)
            for _ in range(100):
                x, y = rng.uniform(-1, 1, size=(2, 3))
                g = eval_kernel_grad(k, x, y)
                fd = np.array(
                    [
                        (eval_kernel(k, x + h * e, y) - eval_kernel(k, x - h * e, y))
                        / (2 * h)
                        for e in np.eye(3)
                    ]
                )
                err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
                assert err <= 1e-6


class TestRkhsNorm:
    def test_zero_values_give_zero_norm(self):
        k = Kernel(lengthscales=(0.5,))
        assert rkhs_norm_finite(k, [[0.0], [1.0]], [0.0, 0.0]) == 0.0

    def test_single_point_norm_is_absolute_value(self):
        k = Kernel(lengthscales=(0.5,))
        assert rkhs_norm_finite(k, [[0.3]], [-2.0]) == pytest.approx(2.0, abs=1e-9)

    def test_expansion_identity(self):
        # a function built as sum_i alpha_i k(., x_i) evaluated on exactly
        # {x_i} has norm sqrt(alpha^T K alpha)
        rng = np.random.default_rng(4)
        k = Kernel(lengthscales=(0.4,))
        X = rng.uniform(0, 1, size=(5, 1))
        alpha = rng.uniform(0.2, 1.0, size=5)
        K = k.gram(X)
        expected = math.sqrt(alpha @ K @ alpha)
        assert rkhs_norm_finite(k, X, K @ alpha) == pytest.approx(
            expected, abs=1e-8
        )

    def test_value_count_mismatch_rejected(self):
        k = Kernel()
        with pytest.raises(InvalidInputError):
            rkhs_norm_finite(k, [[0.0], [1.0]], [1.0])


class TestConstruction:
    def test_invalid_parameters_rejected(self):
        with pytest.raises(InvalidInputError):
            Kernel(family="linear")
        with pytest.raises(InvalidInputError):
            Kernel(lengthscales=(0.0,))
        with pytest.raises(InvalidInputError):
            Kernel(output_scale=-1.0)

    def test_scalar_lengthscale_normalised_to_tuple(self):
        k = Kernel(lengthscales=0.5)
        assert k.lengthscales == (0.5,)

    def test_shared_lengthscale_broadcasts_over_dimensions(self):
        k = Kernel(lengthscales=(0.5,))
        assert eval_kernel(k, [0.0, 0.0, 0.0], [0.1, 0.1, 0.1]) > 0.9
