"""Gaussian kernels, the biased HSIC estimator and the layer-wise HSIC objective.

All kernels use the ``exp(-||a - b||^2 / (2 sigma^2))`` convention, which is
the form the learning-rule gradients are derived from.
"""

import numpy as np

__all__ = [
    "gaussian_kernel",
    "sq_distances",
    "gram",
    "center",
    "hsic",
    "hsic_from_grams",
    "hsic_objective",
    "median_sigma",
]


def _check_sigma(sigma):
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"kernel bandwidth must be positive and finite, got {sigma!r}")
    return sigma


def _as_samples(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
        raise ValueError(f"expected an (N, d) sample matrix, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("sample matrix contains non-finite entries")
    return samples


def gaussian_kernel(a, b, sigma):
    """Gaussian kernel between two vectors of equal dimension."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sigma = _check_sigma(sigma)
    diff = a - b
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma**2)))


def sq_distances(samples):
    """Pairwise squared Euclidean distances between the rows of ``samples``."""
    samples = _as_samples(samples)
    sq = np.einsum("ij,ij->i", samples, samples)
    dist = sq[:, None] + sq[None, :] - 2.0 * samples @ samples.T
    # cancellation can leave tiny negatives and a nonzero diagonal
    np.maximum(dist, 0.0, out=dist)
    np.fill_diagonal(dist, 0.0)
    return dist


def gram(samples, sigma):
    """Uncentered Gaussian Gram matrix ``K[p, q] = k(s_p, s_q)``."""
    sigma = _check_sigma(sigma)
    return np.exp(-sq_distances(samples) / (2.0 * sigma**2))


def center(g):
    """Right-multiply a Gram matrix by ``H = I - 11^T / N`` (row-mean subtraction)."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    return g - g.mean(axis=1, keepdims=True)


def hsic_from_grams(kx, ky):
    """``(N - 1)^-2 tr(K_X H K_Y H)`` from two uncentered Gram matrices."""
    n = kx.shape[0]
    if n < 2:
        raise ValueError("HSIC needs at least two samples")
    if ky.shape != kx.shape:
        raise ValueError(f"Gram shapes differ: {kx.shape} vs {ky.shape}")
    # tr(A B) = sum_pq A_pq B_qp
    return float(np.sum(center(kx) * center(ky).T) / (n - 1) ** 2)


def hsic(x, y, sigma_x, sigma_y):
    """Biased HSIC estimate between paired sample sets ``x`` and ``y``.

    Parameters
    ----------
    x, y : array_like, shape (N, d_x) and (N, d_y)
        Paired samples; one-dimensional inputs are treated as ``d = 1``.
    sigma_x, sigma_y : float
        Kernel bandwidths.

    Returns
    -------
    float
    """
    x = _as_samples(x)
    y = _as_samples(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise ValueError("HSIC needs at least two samples")
    return hsic_from_grams(gram(x, sigma_x), gram(y, sigma_y))


def hsic_objective(x, y, z, gamma, sigma_x, sigma_y, sigma_z):
    """Layer objective ``HSIC(X, Z) - gamma * HSIC(Y, Z)``."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    kz = gram(z, sigma_z)
    kx = gram(x, sigma_x)
    ky = gram(y, sigma_y)
    if not (kx.shape == ky.shape == kz.shape):
        raise ValueError("x, y and z must share the sample count")
    return hsic_from_grams(kx, kz) - gamma * hsic_from_grams(ky, kz)


def median_sigma(samples, fallback=1.0):
    """Median pairwise distance between the rows of ``samples``.

    If the median is zero (e.g. mostly repeated one-hot labels) the median of
    the nonzero distances is used; ``fallback`` if all rows coincide.
    """
    dist = np.sqrt(sq_distances(samples))
    pairs = dist[np.triu_indices(dist.shape[0], k=1)]
    if pairs.size == 0:
        return float(fallback)
    med = float(np.median(pairs))
    if med > 0:
        return med
    nonzero = pairs[pairs > 0]
    return float(np.median(nonzero)) if nonzero.size else float(fallback)
