"""Feedforward networks of leaky integrate-and-fire rate neurons.

Each layer integrates ``tau_ff du/dt = -u + W z_prev`` with explicit Euler and
emits the noisy rate ``z = tanh(u) + zeta``, ``zeta ~ Unif(-a, a)``.
The steady mode skips the integration and evaluates the fixed point
``z = tanh(W z_prev) + zeta`` directly.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LifLayer",
    "FeedforwardNet",
    "LinearDecoder",
    "layer_step",
    "forward_dynamical",
    "forward_steady",
    "forward_steady_batch",
    "init_weights",
]


def init_weights(out_dim, in_dim, rng):
    bound = 1.0 / np.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim))


@dataclass
class LifLayer:
    W: np.ndarray
    tau_ff: float = 5.0
    noise_amp: float = 0.05
    u: np.ndarray = None
    velocity: np.ndarray = None  # momentum buffer for the weight updates

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2:
            raise ValueError(f"W must be a matrix, got shape {self.W.shape}")
        if self.tau_ff <= 0:
            raise ValueError("tau_ff must be positive")
        if self.noise_amp < 0:
            raise ValueError("noise_amp must be nonnegative")
        if self.u is None:
            self.u = np.zeros(self.out_dim)
        if self.velocity is None:
            self.velocity = np.zeros_like(self.W)

    @property
    def in_dim(self):
        return self.W.shape[1]

    @property
    def out_dim(self):
        return self.W.shape[0]

    def noise(self, rng, noise=True):
        if not noise or self.noise_amp == 0:
            return np.zeros(self.out_dim)
        return rng.uniform(-self.noise_amp, self.noise_amp, size=self.out_dim)

    def reset(self):
        self.u = np.zeros(self.out_dim)


@dataclass
class FeedforwardNet:
    layers: list
    dt: float = 1.0

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.in_dim != prev.out_dim:
                raise ValueError(
                    f"layer dimensions incompatible: {prev.out_dim} -> {nxt.in_dim}"
                )

    @classmethod
    def build(cls, arch, rng, tau_ff=5.0, noise_amp=0.05, dt=1.0):
        """Network with layer widths ``arch = [in, h1, ..., out]``."""
        if len(arch) < 2:
            raise ValueError("arch needs an input width and at least one layer")
        layers = [
            LifLayer(init_weights(o, i, rng), tau_ff=tau_ff, noise_amp=noise_amp)
            for i, o in zip(arch[:-1], arch[1:])
        ]
        return cls(layers, dt=dt)

    @property
    def arch(self):
        return [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]

    def reset(self):
        for layer in self.layers:
            layer.reset()

    def weights(self):
        return [layer.W.copy() for layer in self.layers]


def layer_step(layer, inp, dt, rng, noise=True):
    """One Euler step of the membrane dynamics; returns the rate vector."""
    inp = np.asarray(inp, dtype=float)
    if inp.shape != (layer.in_dim,):
        raise ValueError(f"input has shape {inp.shape}, layer expects ({layer.in_dim},)")
    if dt > layer.tau_ff:
        raise ValueError(f"dt={dt} exceeds tau_ff={layer.tau_ff}")
    layer.u = layer.u + (dt / layer.tau_ff) * (-layer.u + layer.W @ inp)
    return np.tanh(layer.u) + layer.noise(rng, noise)


def forward_dynamical(net, x, duration, rng, noise=True):
    """Present ``x`` for ``duration`` ms and return the final rate of every layer.

    Membrane potentials carry over from the previous presentation.
    """
    n_steps = int(round(duration / net.dt))
    if n_steps < 1:
        raise ValueError(f"duration {duration} ms is shorter than dt={net.dt} ms")
    x = np.asarray(x, dtype=float)
    rates = None
    for _ in range(n_steps):
        rates = []
        z = x
        for layer in net.layers:
            z = layer_step(layer, z, net.dt, rng, noise)
            rates.append(z)
    return rates


def forward_steady(net, x, rng=None, noise=True):
    """Fixed-point rates ``z_l = tanh(W_l z_{l-1}) + zeta`` for every layer."""
    z = np.asarray(x, dtype=float)
    rates = []
    for layer in net.layers:
        u = layer.W @ z
        z = np.tanh(u) + layer.noise(rng, noise)
        rates.append(z)
    return rates


def forward_steady_batch(net, xs, rng=None, noise=True):
    """Row-wise :func:`forward_steady` for an (M, d) input matrix."""
    z = np.asarray(xs, dtype=float)
    rates = []
    for layer in net.layers:
        z = np.tanh(z @ layer.W.T)
        if noise and layer.noise_amp > 0:
            z = z + rng.uniform(-layer.noise_amp, layer.noise_amp, size=z.shape)
        rates.append(z)
    return rates


def _softmax(logits):
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class LinearDecoder:
    """Linear readout ``argmax(W_dec f + b)`` fit by full-batch softmax regression."""

    W_dec: np.ndarray
    b: np.ndarray = field(default=None)

    def __post_init__(self):
        self.W_dec = np.asarray(self.W_dec, dtype=float)
        if self.b is None:
            self.b = np.zeros(self.W_dec.shape[0])
        self.b = np.asarray(self.b, dtype=float)

    @classmethod
    def zeros(cls, n_classes, dim):
        return cls(np.zeros((n_classes, dim)), np.zeros(n_classes))

    def fit(self, features, labels_onehot, epochs=1000, lr=0.1):
        """Gradient descent on softmax cross-entropy for exactly ``epochs`` steps.

        Features are standardized during optimization and the scaling is folded
        back into ``W_dec`` and ``b``, so the result is still a plain affine map.
        """
        features = np.asarray(features, dtype=float)
        targets = np.asarray(labels_onehot, dtype=float)
        if features.shape[0] == 0:
            raise ValueError("cannot fit a decoder on an empty dataset")
        if features.shape[0] != targets.shape[0]:
            raise ValueError("features and labels have different row counts")
        if epochs == 0:
            return self
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        scale[scale < 1e-12] = 1.0
        f = (features - mean) / scale
        # warm start from the current parameters, expressed in standardized units
        W = self.W_dec * scale
        b = self.b + self.W_dec @ mean
        m = f.shape[0]
        for _ in range(epochs):
            err = (_softmax(f @ W.T + b) - targets) / m
            W -= lr * err.T @ f
            b -= lr * err.sum(axis=0)
        self.W_dec = W / scale
        self.b = b - self.W_dec @ mean
        return self

    def scores(self, features):
        return np.atleast_2d(features) @ self.W_dec.T + self.b

    def predict(self, feature):
        # np.argmax returns the first maximum, i.e. the lowest index on ties
        return int(np.argmax(self.W_dec @ np.asarray(feature, dtype=float) + self.b))

    def predict_batch(self, features):
        return np.argmax(self.scores(features), axis=1)

    def accuracy(self, features, labels):
        if len(labels) == 0:
            return float("nan")
        return float(np.mean(self.predict_batch(features) == np.asarray(labels)))
