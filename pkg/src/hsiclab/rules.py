"""Layer-wise HSIC learning rules.

The production rule is the three-factor update ``dW_ij = -lr * beta_ij * xi_i``:
``beta`` is Hebbian and uses only the current pre/post rates, ``xi`` is a
per-neuron modulating signal computed over the working-memory buffer.

:func:`full_gradient` is the exact gradient of the layer objective with respect
to the layer weights, written as the double sum over buffer pairs. Restricting
it to zero derivatives for past samples reproduces ``beta * xi`` up to the
``(N - 1)^-2`` normalization of the estimator. :func:`finite_diff_gradient` is
the independent numerical oracle for both.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import center, gram, hsic_objective
from .network import forward_steady_batch

__all__ = [
    "RuleParams",
    "UpdateDecomposition",
    "local_beta",
    "centered_column",
    "modulation_weights",
    "xi_from_bracket",
    "xi_from_arrays",
    "global_xi",
    "apply_update",
    "three_factor_update",
    "layer_inputs",
    "full_gradient",
    "finite_diff_gradient",
]


@dataclass
class RuleParams:
    gamma: float = 1.0
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    sigma_z: float = 1.0
    lr: float = 1e-2
    momentum: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        for name in ("sigma_x", "sigma_y", "sigma_z"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class UpdateDecomposition:
    beta: np.ndarray
    xi: np.ndarray
    delta_w: np.ndarray


def local_beta(z_prev, z_cur):
    """Hebbian factor ``(1 - z_cur_i^2) * z_prev_j``."""
    z_prev = np.asarray(z_prev, dtype=float)
    z_cur = np.asarray(z_cur, dtype=float)
    return np.outer(1.0 - z_cur**2, z_prev)


def centered_column(samples, sigma):
    """``kbar(s_p, s_0)`` for every buffer slot ``p``: column 0 of ``K H``."""
    return center(gram(samples, sigma))[:, 0]


def modulation_weights(xs, ys, gamma, sigma_x, sigma_y):
    """Per-sample bracket ``kbar(x_p, x_0) - gamma * kbar(y_p, y_0)``.

    ``kbar(a_p, a_q) = [K H]_pq`` is the row-centered kernel. The first
    argument runs over the buffer, which is the index order produced by
    differentiating ``tr(K_X H K_Z H)``.
    """
    return centered_column(xs, sigma_x) - gamma * centered_column(ys, sigma_y)


def xi_from_bracket(bracket, zs, sigma_z):
    """``xi_i = sum_p bracket[p] * alpha_bar_i(z_p)`` for a precomputed bracket."""
    zs = np.asarray(zs, dtype=float)
    if zs.ndim == 1:
        zs = zs[:, None]
    diff = zs[0][None, :] - zs  # (N, out)
    k0 = np.exp(-np.sum(diff**2, axis=1) / (2.0 * sigma_z**2))
    alpha = -2.0 * k0[:, None] / sigma_z**2 * diff
    alpha_bar = alpha - alpha.mean(axis=0, keepdims=True)
    return bracket @ alpha_bar


def xi_from_arrays(xs, ys, zs, gamma, sigma_x, sigma_y, sigma_z):
    """Modulating signal from stacked buffer arrays (row 0 = current sample)."""
    return xi_from_bracket(modulation_weights(xs, ys, gamma, sigma_x, sigma_y), zs, sigma_z)


def global_xi(buffer, layer, params):
    """Modulating signal ``xi`` for ``layer`` over the buffer contents."""
    if not buffer.is_warm():
        raise RuntimeError(
            f"buffer holds {len(buffer)} of {buffer.capacity} samples; warm it up first"
        )
    return xi_from_arrays(
        buffer.xs(), buffer.ys(), buffer.zs(layer),
        params.gamma, params.sigma_x, params.sigma_y, params.sigma_z,
    )


def apply_update(layer_obj, grad_direction, lr, momentum):
    """Heavy-ball step ``v <- momentum * v + g; W <- W - lr * v``; returns ``dW``."""
    layer_obj.velocity = momentum * layer_obj.velocity + grad_direction
    delta_w = -lr * layer_obj.velocity
    layer_obj.W = layer_obj.W + delta_w
    return delta_w


def three_factor_update(net, layer, buffer, params, xi=None):
    """Apply the three-factor rule to ``net.layers[layer]``.

    ``xi`` may be supplied externally (e.g. a reservoir readout); otherwise it
    is computed from the buffer.
    """
    current = buffer[0]
    z_prev = current.x if layer == 0 else current.z[layer - 1]
    beta = local_beta(z_prev, current.z[layer])
    if xi is None:
        xi = global_xi(buffer, layer, params)
    xi = np.asarray(xi, dtype=float)
    delta_w = apply_update(net.layers[layer], beta * xi[:, None], params.lr, params.momentum)
    return UpdateDecomposition(beta=beta, xi=xi, delta_w=delta_w)


def layer_inputs(buffer, layer, net=None):
    """Presynaptic rates and layer rates for every buffer slot.

    With ``net`` given, rates are recomputed noise-free from the stored inputs
    under the current weights; otherwise the stored snapshots are returned.
    """
    if net is None:
        return buffer.inputs_to(layer), buffer.zs(layer)
    rates = forward_steady_batch(net, buffer.xs(), noise=False)
    z_prev = buffer.xs() if layer == 0 else rates[layer - 1]
    return z_prev, rates[layer]


def full_gradient(buffer, layer, params, net=None, past_derivatives=True):
    """Gradient of ``HSIC(X, Z) - gamma HSIC(Y, Z)`` with respect to the layer weights.

    Evaluated as the double sum over buffer pairs ``(p, q)`` of the centered
    bracket times the centered kernel derivative. With ``net`` the layer rates
    are recomputed from the stored inputs under the current weights (noise off);
    without it the stored snapshots are used. ``past_derivatives=False`` sets
    ``dz_p/dW = 0`` for every ``p != 0``.
    """
    xs, ys = buffer.xs(), buffer.ys()
    z_prev, zs = layer_inputs(buffer, layer, net)
    n = zs.shape[0]
    if n < 2:
        raise ValueError("the gradient needs at least two buffered samples")
    sz2 = params.sigma_z**2

    # A[q, p] = kbar(x_q, x_p) - gamma kbar(y_q, y_p); the sum pairs A[q, p] with dkbar(z_p, z_q)
    a = center(gram(xs, params.sigma_x)) - params.gamma * center(gram(ys, params.sigma_y))
    coef = a.T / (n - 1) ** 2
    # centering the derivative over its second argument moves onto the coefficients
    coef = coef - coef.mean(axis=1, keepdims=True)

    kz = gram(zs, params.sigma_z)
    diff = zs[:, None, :] - zs[None, :, :]  # (p, q, i)
    a_pqi = -(kz / sz2)[:, :, None] * diff
    weighted = coef[:, :, None] * a_pqi
    # dz_p[i]/dW_ij = (1 - z_p[i]^2) z_prev_p[j]
    deriv = 1.0 - zs**2
    if not past_derivatives:
        deriv = deriv.copy()
        deriv[1:] = 0.0
    # sum_pq w[p,q,i] (D_p - D_q)[i,j] with D_p[i,j] = deriv[p,i] z_prev[p,j]
    e = weighted.sum(axis=1) - weighted.sum(axis=0)  # (p, i)
    return (e * deriv).T @ z_prev


def finite_diff_gradient(buffer, layer, params, net, h=1e-5):
    """Central-difference gradient of the layer objective (noise off, steady mode)."""
    xs, ys = buffer.xs(), buffer.ys()
    z_prev, _ = layer_inputs(buffer, layer, net)
    W = net.layers[layer].W

    def objective(w):
        z = np.tanh(z_prev @ w.T)
        return hsic_objective(
            xs, ys, z, params.gamma, params.sigma_x, params.sigma_y, params.sigma_z
        )

    grad = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        w_plus = W.copy()
        w_minus = W.copy()
        w_plus[idx] += h
        w_minus[idx] -= h
        grad[idx] = (objective(w_plus) - objective(w_minus)) / (2.0 * h)
    return grad
