"""Comparison learners: a back-propagation MLP and the two-sample pHSIC rule."""

from dataclasses import dataclass

import numpy as np

from .rules import apply_update, local_beta

__all__ = [
    "BackpropNet",
    "backprop_gradients",
    "backprop_loss",
    "backprop_train_step",
    "PhsicParams",
    "phsic_xi",
    "phsic_update",
]


class BackpropNet:
    """ReLU MLP with a softmax output, trained by minibatch SGD with momentum."""

    def __init__(self, arch, rng):
        self.W = []
        self.b = []
        for i, o in zip(arch[:-1], arch[1:]):
            # He-uniform init for ReLU layers
            bound = np.sqrt(6.0 / i)
            self.W.append(rng.uniform(-bound, bound, size=(o, i)))
            self.b.append(np.zeros(o))
        self.vW = [np.zeros_like(w) for w in self.W]
        self.vb = [np.zeros_like(b) for b in self.b]

    @property
    def arch(self):
        return [self.W[0].shape[1]] + [w.shape[0] for w in self.W]

    def params(self):
        return self.W + self.b

    def forward(self, x):
        """Returns the list of activations, input first, logits last."""
        acts = [np.atleast_2d(x)]
        h = acts[0]
        for k, (w, b) in enumerate(zip(self.W, self.b)):
            h = h @ w.T + b
            if k < len(self.W) - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return acts

    def predict_batch(self, x):
        return np.argmax(self.forward(x)[-1], axis=1)

    def accuracy(self, x, labels):
        return float(np.mean(self.predict_batch(x) == np.asarray(labels)))


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def backprop_loss(net, x, y_onehot):
    logits = net.forward(x)[-1]
    return float(-np.mean(np.sum(y_onehot * _log_softmax(logits), axis=1)))


def backprop_gradients(net, x, y_onehot):
    """Mean cross-entropy loss and its gradients ``(loss, dW list, db list)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y_onehot = np.atleast_2d(np.asarray(y_onehot, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y_onehot.shape[0] or x.shape[1] != net.W[0].shape[1]:
        raise ValueError(f"batch shapes {x.shape}, {y_onehot.shape} do not fit the network")
    acts = net.forward(x)
    logp = _log_softmax(acts[-1])
    m = x.shape[0]
    loss = float(-np.mean(np.sum(y_onehot * logp, axis=1)))
    delta = (np.exp(logp) - y_onehot) / m
    dW = [None] * len(net.W)
    db = [None] * len(net.W)
    for k in range(len(net.W) - 1, -1, -1):
        dW[k] = delta.T @ acts[k]
        db[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.W[k]) * (acts[k] > 0)
    return loss, dW, db


def backprop_train_step(net, batch_x, batch_y_onehot, lr, momentum=0.9):
    """One SGD-with-momentum step; returns the pre-update minibatch loss."""
    loss, dW, db = backprop_gradients(net, batch_x, batch_y_onehot)
    for k in range(len(net.W)):
        net.vW[k] = momentum * net.vW[k] + dW[k]
        net.vb[k] = momentum * net.vb[k] + db[k]
        net.W[k] = net.W[k] - lr * net.vW[k]
        net.b[k] = net.b[k] - lr * net.vb[k]
    return loss


@dataclass
class PhsicParams:
    gamma: float = 1.0
    sigma_z: float = 1.0
    sigma_y: float = 1.0
    batch: int = 2
    lr: float = 1e-2
    momentum: float = 0.0

    def __post_init__(self):
        if self.batch < 2:
            raise ValueError("pHSIC needs a window of at least two samples")
        if self.sigma_z <= 0 or self.sigma_y <= 0:
            raise ValueError("kernel bandwidths must be positive")


def phsic_xi(zs, ys, gamma, sigma_z, sigma_y):
    """Modulating signal of the pHSIC variant over a window (row 0 = current).

    The bracket uses uncentered kernels of the layer output and of the label,
    and the kernel-derivative term is not centered either.
    """
    zs = np.asarray(zs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    dz = zs[0][None, :] - zs
    dy = ys[0][None, :] - ys
    kz = np.exp(-np.sum(dz**2, axis=1) / (2.0 * sigma_z**2))
    ky = np.exp(-np.sum(dy**2, axis=1) / (2.0 * sigma_y**2))
    alpha = -2.0 * kz[:, None] / sigma_z**2 * dz
    return (kz - gamma * ky) @ alpha


def phsic_update(net, layer, buffer, params):
    """Apply the pHSIC three-factor update to ``net.layers[layer]``; returns ``dW``.

    Reads only the ``params.batch`` newest buffer slots.
    """
    if len(buffer) < params.batch:
        raise RuntimeError(
            f"buffer holds {len(buffer)} samples, pHSIC window needs {params.batch}"
        )
    window = buffer.newest(params.batch)
    zs = np.stack([s.z[layer] for s in window])
    ys = np.stack([s.y for s in window])
    current = window[0]
    z_prev = current.x if layer == 0 else current.z[layer - 1]
    beta = local_beta(z_prev, current.z[layer])
    xi = phsic_xi(zs, ys, params.gamma, params.sigma_z, params.sigma_y)
    return apply_update(net.layers[layer], beta * xi[:, None], params.lr, params.momentum)
