"""Gradient estimators: frozen worked examples, exactness, accounting, bounds."""

import numpy as np
import pytest

from dfoline import (
    ConditioningError,
    DirectionSet,
    NoiseModel,
    Oracle,
    ProblemConstants,
    RngStream,
    UndefinedMetricError,
    cgsg,
    coordinate_directions,
    gaussian_directions,
    gsg,
    interpolation_error_bound,
    interpolation_gradient,
    orthonormal_directions,
    relative_error,
    wrap_with_noise,
)
from dfoline.estimators import GradientEstimate


def linear_oracle(a, noise=None):
    a = np.asarray(a, dtype=float)
    return Oracle(lambda X: np.asarray(X) @ a, a.size, noise, vectorized=True)


def single_direction(u):
    u = np.asarray(u, dtype=float)[None, :]
    return DirectionSet(u, "gaussian")


class TestGsg:
    def test_constant_function_gives_zero(self):
        o = Oracle(lambda x: 7.0, 3)
        est = gsg(o, np.zeros(3), 0.5, gaussian_directions(3, 4, RngStream(1)))
        np.testing.assert_array_equal(est.g, np.zeros(3))
        assert est.estimator_kind == "GSG"

    def test_hand_example_sphere_single_direction(self):
        """f = ||x||^2 at x=(1,0), sigma=1, u=(1,1): difference 4, g = (4,4)."""
        o = Oracle(lambda x: float(np.dot(x, x)), 2)
        est = gsg(o, np.array([1.0, 0.0]), 1.0, single_direction([1.0, 1.0]))
        np.testing.assert_allclose(est.g, [4.0, 4.0], rtol=0, atol=1e-14)
        assert est.evals_used == 2 and o.eval_count == 2
        assert est.f_center == 1.0

    def test_orthonormal_rows_underestimate_by_factor_n(self):
        """The 1/N average shrinks a linear gradient: a=(1,0) with e1,e2 gives (1/2, 0)."""
        o = linear_oracle([1.0, 0.0])
        dirs = DirectionSet(np.eye(2), "orthonormal")
        est = gsg(o, np.zeros(2), 0.1, dirs)
        np.testing.assert_allclose(est.g, [0.5, 0.0], rtol=0, atol=1e-12)

    def test_center_evaluated_once(self):
        o = linear_oracle([2.0, -1.0, 0.5])
        gsg(o, np.zeros(3), 0.2, gaussian_directions(3, 5, RngStream(3)))
        assert o.eval_count == 6  # N + 1, not 2N

    def test_unbiased_for_quadratic(self):
        """Means over fresh direction sets converge on grad phi.

        For a quadratic the Gaussian-smoothed gradient equals the true
        gradient (odd moments vanish), so the estimator mean must match it
        within a CLT tolerance componentwise.
        """
        A = np.diag([1.0, 2.0])
        x = np.array([1.0, -0.5])
        grad = A @ x
        o = Oracle(lambda X: 0.5 * np.sum((np.asarray(X) @ A) * X, axis=-1), 2, vectorized=True)
        reps, N, sigma = 20_000, 1, 0.3
        base = RngStream(321, 1)
        samples = np.empty((reps, 2))
        for r in range(reps):
            samples[r] = gsg(o, x, sigma, gaussian_directions(2, N, base.child(r))).g
        se = samples.std(axis=0, ddof=1) / np.sqrt(reps)
        assert np.all(np.abs(samples.mean(axis=0) - grad) <= 3.0 * se)


class TestCgsg:
    def test_symmetry_kills_even_terms(self):
        o = Oracle(lambda x: float(x[0] ** 2), 1)
        est = cgsg(o, np.zeros(1), 0.3, single_direction([1.0]))
        np.testing.assert_allclose(est.g, [0.0], rtol=0, atol=1e-14)

    def test_constant_function_gives_zero(self):
        o = Oracle(lambda x: -3.0, 2)
        est = cgsg(o, np.zeros(2), 1.0, gaussian_directions(2, 3, RngStream(0)))
        np.testing.assert_array_equal(est.g, np.zeros(2))

    def test_hand_example_linear(self):
        """a=(2,3), u=(1,1): symmetric difference spans 2 sigma, so
        g = (1/2)(f(x+su)-f(x-su))/s * u = (aT u) u = (5, 5)."""
        o = linear_oracle([2.0, 3.0])
        est = cgsg(o, np.zeros(2), 0.7, single_direction([1.0, 1.0]))
        np.testing.assert_allclose(est.g, [5.0, 5.0], rtol=0, atol=1e-12)
        assert est.evals_used == 2 and o.eval_count == 2
        assert est.f_center is None  # center never queried
        assert est.estimator_kind == "cGSG"

    def test_evals_are_2n(self):
        o = linear_oracle([1.0, 1.0])
        est = cgsg(o, np.zeros(2), 0.5, gaussian_directions(2, 6, RngStream(4)))
        assert est.evals_used == 12 and o.eval_count == 12


class TestInterpolation:
    def test_linear_solve_hand_example(self):
        """a=(2,3), rows (1,0),(1,1): F=(2,5) and the solve returns a exactly."""
        o = linear_oracle([2.0, 3.0])
        Q = DirectionSet(np.array([[1.0, 0.0], [1.0, 1.0]]), "gaussian")
        est = interpolation_gradient(o, np.zeros(2), 1.0, Q)
        np.testing.assert_allclose(est.g, [2.0, 3.0], rtol=0, atol=1e-12)
        assert est.estimator_kind == "LIGD"
        assert est.evals_used == 3 and o.eval_count == 3

    def test_forward_difference_curvature_bias(self):
        """f = x^2 at 0 with sigma=0.1: g = sigma L / 2 = 0.1."""
        o = Oracle(lambda x: float(x[0] ** 2), 1)
        est = interpolation_gradient(o, np.zeros(1), 0.1, coordinate_directions(1))
        np.testing.assert_allclose(est.g, [0.1], rtol=0, atol=1e-15)
        assert est.estimator_kind == "FD"

    def test_kind_labels(self):
        o = linear_oracle([1.0, 2.0])
        lbl = lambda dirs: interpolation_gradient(o, np.zeros(2), 0.1, dirs).estimator_kind
        assert lbl(coordinate_directions(2)) == "FD"
        assert lbl(orthonormal_directions(2, 2, RngStream(1))) == "LIOD"
        assert lbl(gaussian_directions(2, 2, RngStream(1))) == "LIGD"

    def test_requires_n_directions(self):
        o = linear_oracle([1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="N = n"):
            interpolation_gradient(o, np.zeros(3), 0.1, gaussian_directions(3, 2, RngStream(1)))

    @pytest.mark.parametrize("n", [2, 10, 50])
    def test_exactness_on_linear_functions(self, n):
        """All three direction kinds reproduce linear gradients to 1e-12 relative."""
        for seed in range(100):
            a = RngStream(seed, 3).generator().standard_normal(n)
            o = linear_oracle(a)
            for dirs in (
                coordinate_directions(n),
                orthonormal_directions(n, n, RngStream(seed, 1)),
                gaussian_directions(n, n, RngStream(seed, 1)),
            ):
                est = interpolation_gradient(o, np.zeros(n), 0.05, dirs)
                assert relative_error(est.g, a) <= 1.0e-12

    def test_coordinate_equals_textbook_forward_differences(self):
        fn = lambda x: float(np.sin(x[0]) + x[1] ** 3)
        o = Oracle(fn, 2)
        x = np.array([0.4, -1.2])
        sigma = 1e-4
        est = interpolation_gradient(o, x, sigma, coordinate_directions(2))
        f0 = fn(x)
        textbook = np.array([
            (fn(x + np.array([sigma, 0.0])) - f0) / sigma,
            (fn(x + np.array([0.0, sigma])) - f0) / sigma,
        ])
        np.testing.assert_array_equal(est.g, textbook)

    def test_error_bound_conformance(self):
        """With orthonormal rows, measured error never exceeds
        sqrt(n) (sigma L / 2 + 2 eps_f / sigma) across randomized trials."""
        eps_f = 1e-5
        n = 6
        A = np.diag(np.linspace(1.0, 4.0, n))  # L = 4 exactly
        consts = ProblemConstants(L=4.0, eps_f=eps_f)
        value = lambda X: 0.5 * np.sum((np.asarray(X) @ A) * X, axis=-1)
        for trial in range(1000):
            seed = 9000 + trial
            o = wrap_with_noise(
                value, NoiseModel(kind="uniform", bound=eps_f, seed=seed),
                dimension=n, vectorized=True,
            )
            x = RngStream(seed, 2).generator().uniform(-2, 2, n)
            sigma = (1e-2, 1e-3)[trial % 2]
            dirs = orthonormal_directions(n, n, RngStream(seed, 1))
            est = interpolation_gradient(o, x, sigma, dirs)
            err = np.linalg.norm(est.g - A @ x)
            assert err <= interpolation_error_bound(sigma, n, consts) * (1 + 1e-9)

    def test_conditioning_error_without_stream(self):
        """A near-singular direction set with no seed provenance fails before
        spending any evaluations."""
        o = linear_oracle([1.0, 1.0])
        Q = np.array([[1.0, 0.0], [1.0, 1e-12]])
        with pytest.raises(ConditioningError, match="condition number"):
            interpolation_gradient(o, np.zeros(2), 0.1, DirectionSet(Q, "gaussian"))
        assert o.eval_count == 0

    def test_conditioning_redraw_with_stream(self):
        """Seed provenance allows one automatic redraw, which recovers."""
        o = linear_oracle([2.0, -1.0])
        Q = np.array([[1.0, 0.0], [1.0, 1e-12]])
        bad = DirectionSet(Q, "gaussian", seed=13, stream=RngStream(13, 1))
        est = interpolation_gradient(o, np.zeros(2), 0.1, bad)
        np.testing.assert_allclose(est.g, [2.0, -1.0], rtol=0, atol=1e-10)


class TestCommonValidation:
    def test_sigma_must_be_positive(self):
        o = linear_oracle([1.0])
        for bad in (0.0, -1.0, np.nan):
            with pytest.raises(ValueError, match="radius"):
                gsg(o, np.zeros(1), bad, coordinate_directions(1))

    def test_direction_dimension_must_match(self):
        o = linear_oracle([1.0, 2.0])
        with pytest.raises(ValueError, match="dimension"):
            gsg(o, np.zeros(2), 0.1, coordinate_directions(3))

    def test_estimate_must_be_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            GradientEstimate(np.array([np.nan]), 0.1, coordinate_directions(1), 2, "FD")


class TestRelativeError:
    def test_exact_gives_zero(self):
        assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_zero_estimate_gives_one(self):
        assert relative_error([0.0, 0.0], [3.0, 4.0]) == 1.0

    def test_doubled_gradient_gives_one(self):
        assert relative_error([2.0, 4.0], [1.0, 2.0]) == 1.0

    def test_zero_true_gradient_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            relative_error([1.0], [0.0])

    def test_non_finite_true_gradient_rejected(self):
        with pytest.raises(ValueError):
            relative_error([1.0], [np.inf])
