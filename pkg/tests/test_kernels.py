import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hsiclab.kernels import (
    center,
    gaussian_kernel,
    gram,
    hsic,
    hsic_from_grams,
    hsic_objective,
    median_sigma,
    sq_distances,
)


def brute_hsic(x, y, sx, sy):
    """Double sum over centered kernels, written with scalar loops."""
    n = len(x)

    def kbar(s, sigma, p, q):
        row = [gaussian_kernel(s[p], s[m], sigma) for m in range(n)]
        return gaussian_kernel(s[p], s[q], sigma) - sum(row) / n

    total = 0.0
    for p in range(n):
        for q in range(n):
            total += kbar(x, sx, p, q) * kbar(y, sy, q, p)
    return total / (n - 1) ** 2


samples = st.integers(2, 8).flatmap(
    lambda n: st.tuples(
        arrays(float, (n, 3), elements=st.floats(-3, 3)),
        arrays(float, (n, 2), elements=st.floats(-3, 3)),
    )
)


class TestGaussianKernel:
    def test_identical_vectors(self):
        assert gaussian_kernel([1.5, -2.0], [1.5, -2.0], 0.7) == 1.0

    def test_distance_equal_to_sigma(self):
        np.testing.assert_allclose(gaussian_kernel([0.0], [2.0], 2.0), np.exp(-0.5), rtol=1e-15)

    def test_three_four_five(self):
        np.testing.assert_allclose(gaussian_kernel([0, 0], [3, 4], 5.0), np.exp(-0.5), rtol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_kernel([0, 0], [1, 2, 3], 1.0)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.inf, np.nan])
    def test_invalid_sigma(self, sigma):
        with pytest.raises(ValueError):
            gaussian_kernel([0], [1], sigma)


class TestGram:
    def test_identical_rows_give_ones(self):
        np.testing.assert_array_equal(gram(np.ones((4, 3)), 1.0), np.ones((4, 4)))

    def test_single_sample(self):
        np.testing.assert_array_equal(gram(np.array([[0.3, 0.2]]), 1.0), [[1.0]])

    def test_matches_scalar_kernel(self, rng):
        s = rng.normal(size=(3, 4))
        expected = [[gaussian_kernel(a, b, 1.3) for b in s] for a in s]
        np.testing.assert_allclose(gram(s, 1.3), expected, rtol=1e-13)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            gram(np.array([[0.0], [np.nan]]), 1.0)

    def test_sq_distances_nonnegative_with_zero_diagonal(self, rng):
        d = sq_distances(rng.normal(size=(6, 3)) * 1e3)
        assert np.all(d >= 0)
        np.testing.assert_array_equal(np.diag(d), 0.0)


class TestCenter:
    def test_all_ones_becomes_zero(self):
        np.testing.assert_array_equal(center(np.ones((3, 3))), np.zeros((3, 3)))

    def test_single_sample(self):
        np.testing.assert_array_equal(center(np.array([[1.0]])), [[0.0]])

    def test_equals_explicit_product(self, rng):
        g = gram(rng.normal(size=(4, 2)), 1.0)
        h = np.eye(4) - np.ones((4, 4)) / 4
        np.testing.assert_allclose(center(g), g @ h, atol=1e-15)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            center(np.ones((2, 3)))


class TestHsic:
    def test_constant_y_gives_zero(self, rng):
        assert hsic(rng.normal(size=(5, 2)), np.ones((5, 1)), 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_self_dependence_positive(self):
        x = np.array([[0.0], [1.0], [2.5]])
        assert hsic(x, x, 1.0, 1.0) > 0

    def test_matches_double_sum(self, rng):
        x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
        np.testing.assert_allclose(hsic(x, y, 1.0, 1.0), brute_hsic(x, y, 1.0, 1.0), rtol=1e-10)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            hsic(np.zeros((1, 2)), np.zeros((1, 2)), 1.0, 1.0)

    def test_mismatched_counts(self):
        with pytest.raises(ValueError):
            hsic(np.zeros((3, 2)), np.zeros((4, 2)), 1.0, 1.0)

    def test_gram_shape_mismatch(self):
        with pytest.raises(ValueError):
            hsic_from_grams(np.eye(3), np.eye(4))


class TestHsicObjective:
    def test_gamma_zero(self, rng):
        x, y, z = rng.normal(size=(5, 2)), rng.normal(size=(5, 1)), rng.normal(size=(5, 3))
        assert hsic_objective(x, y, z, 0.0, 1.0, 1.0, 0.8) == hsic(x, z, 1.0, 0.8)

    def test_constant_z(self, rng):
        x, y = rng.normal(size=(5, 2)), rng.normal(size=(5, 1))
        assert hsic_objective(x, y, np.ones((5, 2)), 3.0, 1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_composed_from_oracles(self, rng):
        x, y, z = rng.normal(size=(5, 2)), rng.normal(size=(5, 1)), rng.normal(size=(5, 3))
        expected = brute_hsic(x, z, 1.1, 0.9) - 2.5 * brute_hsic(y, z, 0.7, 0.9)
        np.testing.assert_allclose(
            hsic_objective(x, y, z, 2.5, 1.1, 0.7, 0.9), expected, rtol=1e-10
        )

    def test_negative_gamma(self, rng):
        z = rng.normal(size=(3, 1))
        with pytest.raises(ValueError):
            hsic_objective(z, z, z, -1.0, 1.0, 1.0, 1.0)


class TestMedianSigma:
    def test_known_distances(self):
        assert median_sigma(np.array([[0.0], [1.0], [3.0]])) == 2.0

    def test_zero_median_uses_nonzero_distances(self):
        y = np.array([[1, 0]] * 4 + [[0, 1]], dtype=float)  # 6 of 10 pairs coincide
        assert median_sigma(y) == pytest.approx(np.sqrt(2))

    def test_all_identical_falls_back(self):
        assert median_sigma(np.zeros((4, 2)), fallback=0.5) == 0.5


@pytest.mark.invariant
class TestKernelInvariants:
    @settings(max_examples=60, deadline=None)
    @given(samples)
    def test_symmetry(self, xy):
        x, y = xy
        assert abs(hsic(x, y, 1.0, 1.3) - hsic(y, x, 1.3, 1.0)) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(samples, st.randoms(use_true_random=False))
    def test_joint_permutation(self, xy, rnd):
        x, y = xy
        perm = list(range(len(x)))
        rnd.shuffle(perm)
        a = hsic(x, y, 1.0, 1.0)
        b = hsic(x[perm], y[perm], 1.0, 1.0)
        assert abs(a - b) <= 1e-10 * max(abs(a), 1e-300) + 1e-15

    @settings(max_examples=60, deadline=None)
    @given(samples)
    def test_trace_equals_double_sum(self, xy):
        x, y = xy
        a = hsic(x, y, 1.0, 0.8)
        b = brute_hsic(x, y, 1.0, 0.8)
        assert abs(a - b) <= 1e-10 * max(abs(b), 1e-300) + 1e-15

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 16).flatmap(lambda n: arrays(float, (n, 3), elements=st.floats(-5, 5))))
    def test_gram_psd(self, s):
        assert np.linalg.eigvalsh(gram(s, 1.0)).min() >= -1e-8

    @settings(max_examples=40, deadline=None)
    @given(samples)
    def test_center_idempotent(self, xy):
        c = center(gram(xy[0], 1.0))
        np.testing.assert_allclose(center(c), c, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(samples)
    def test_centered_rows_sum_to_zero(self, xy):
        np.testing.assert_allclose(center(gram(xy[0], 1.0)).sum(axis=1), 0.0, atol=1e-13)
