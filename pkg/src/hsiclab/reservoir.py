"""Auxiliary recurrent reservoir that learns to emit the modulating signal.

Dynamics (Euler, step ``dt`` ms)::

    tau_r du/dt = -u + lambda W_r r + W_i r_in + W_fb r_o
    r   = tanh(u) + zeta_r
    r_o = W_o u + zeta_o

Only the readout ``W_o`` is plastic. It is trained with reward-modulated
Hebbian plasticity: the update ``eta(t) M (r_o - lpf(r_o)) r^T`` is gated by
``M = [P > lpf(P)]`` with performance ``P = -||r_o - xi||^2``.
"""

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ReservoirParams",
    "ReservoirState",
    "LpfState",
    "lpf_step",
    "learning_rate",
    "reservoir_init",
    "reservoir_step",
    "rm_hebb_update",
    "train_reservoir",
    "normalized_mse",
]


@dataclass(frozen=True)
class ReservoirParams:
    n_rec: int = 2000
    tau_r: float = 50.0  # ms
    lambda_chaos: float = 1.2
    zeta_r: float = 5e-6
    zeta_o: float = 1e-2
    tau_lpf: float = 5.0  # ms
    eta0: float = 1e-4
    tau_decay: float = 20.0  # s
    dt: float = 1.0  # ms
    sample_ms: float = 50.0

    def __post_init__(self):
        if self.n_rec < 1:
            raise ValueError("n_rec must be >= 1")
        for name in ("tau_r", "lambda_chaos", "tau_lpf", "tau_decay", "dt", "sample_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("zeta_r", "zeta_o", "eta0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.dt > self.tau_r:
            raise ValueError("dt must not exceed tau_r")
        if self.dt >= self.tau_lpf:
            raise ValueError("dt must be smaller than tau_lpf")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class LpfState:
    value: object
    tau: float

    def step(self, sample, dt):
        self.value = lpf_step(self.value, sample, dt, self.tau)
        return self.value


def lpf_step(value, sample, dt, tau):
    """Exponential low-pass filter ``(1 - dt/tau) value + (dt/tau) sample``."""
    if not dt < tau:
        raise ValueError(f"lpf needs dt < tau, got dt={dt}, tau={tau}")
    a = dt / tau
    return (1.0 - a) * value + a * sample


def learning_rate(t, eta0, tau_decay):
    """Decaying rate ``eta0 / (1 + t / tau_decay)``; ``t`` and ``tau_decay`` in seconds."""
    return eta0 / (1.0 + t / tau_decay)


@dataclass
class ReservoirState:
    W_r: np.ndarray
    W_i: np.ndarray
    W_fb: np.ndarray
    W_o: np.ndarray
    u_r: np.ndarray
    r: np.ndarray
    r_o: np.ndarray
    r_o_bar: np.ndarray
    P_bar: float = 0.0
    last_gate: int = 0

    @property
    def d_in(self):
        return self.W_i.shape[1]

    @property
    def d_out(self):
        return self.W_o.shape[0]

    def copy(self):
        return ReservoirState(
            **{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()}
        )


def reservoir_init(params, d_in, d_out, rng):
    if d_in < 1 or d_out < 1:
        raise ValueError("reservoir input and output dimensions must be >= 1")
    n = params.n_rec
    u_r = rng.uniform(-0.1, 0.1, size=n)
    return ReservoirState(
        W_r=rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, n)),
        W_i=rng.uniform(-1.0, 1.0, size=(n, d_in)),
        W_fb=rng.uniform(-1.0, 1.0, size=(n, d_out)),
        W_o=np.zeros((d_out, n)),
        u_r=u_r,
        r=np.tanh(u_r),
        r_o=np.zeros(d_out),
        r_o_bar=np.zeros(d_out),
        P_bar=0.0,
    )


def reservoir_step(state, inp, params, rng, noise=True):
    """Advance one ``dt``; returns the new readout ``r_o``."""
    inp = np.asarray(inp, dtype=float)
    drive = (
        params.lambda_chaos * (state.W_r @ state.r)
        + state.W_i @ inp
        + state.W_fb @ state.r_o
    )
    state.u_r = state.u_r + (params.dt / params.tau_r) * (drive - state.u_r)
    state.r = np.tanh(state.u_r)
    state.r_o = state.W_o @ state.u_r
    if noise:
        if params.zeta_r > 0:
            state.r = state.r + rng.uniform(-params.zeta_r, params.zeta_r, size=state.r.shape)
        if params.zeta_o > 0:
            state.r_o = state.r_o + rng.uniform(-params.zeta_o, params.zeta_o, size=state.r_o.shape)
    return state.r_o


def rm_hebb_update(state, xi_true, t, params):
    """Gated Hebbian readout update for the current tick; returns the gate ``M``.

    Filters are advanced after the weight update.
    """
    err = state.r_o - np.asarray(xi_true, dtype=float)
    perf = -float(err @ err)
    gate = 1 if perf > state.P_bar else 0
    if gate:
        eta = learning_rate(t, params.eta0, params.tau_decay)
        state.W_o += eta * np.outer(state.r_o - state.r_o_bar, state.r)
    state.P_bar = lpf_step(state.P_bar, perf, params.dt, params.tau_lpf)
    state.r_o_bar = lpf_step(state.r_o_bar, state.r_o, params.dt, params.tau_lpf)
    state.last_gate = gate
    return gate


def train_reservoir(state, signal_source, duration_s, params, rng, learn=True, t0=0.0,
                    record_every=1):
    """Drive the reservoir with ``(input, xi)`` pairs, each held ``sample_ms``.

    Parameters
    ----------
    signal_source : iterator
        Yields ``(input, xi_true)`` pairs; one pair per sample period.
    duration_s : float
        Simulated time in seconds.
    learn : bool
        Apply the gated readout update each tick.
    t0 : float
        Time (s) at which this segment starts, for the learning-rate schedule.
    record_every : int
        Keep every k-th tick in the returned trace.

    Returns
    -------
    dict
        ``t`` (s), ``P``, ``gate``, ``readout`` and ``target`` arrays.
    """
    n_ticks = int(round(duration_s * 1000.0 / params.dt))
    ticks_per_sample = max(1, int(round(params.sample_ms / params.dt)))
    trace = {"t": [], "P": [], "gate": [], "readout": [], "target": []}
    inp = xi = None
    for k in range(n_ticks):
        if k % ticks_per_sample == 0:
            inp, xi = next(signal_source)
        r_o = reservoir_step(state, inp, params, rng)
        t = t0 + (k + 1) * params.dt / 1000.0
        if learn:
            gate = rm_hebb_update(state, xi, t, params)
        else:
            gate = 0
        if k % record_every == 0:
            err = r_o - xi
            trace["t"].append(t)
            trace["P"].append(-float(err @ err))
            trace["gate"].append(gate)
            trace["readout"].append(r_o.copy())
            trace["target"].append(np.asarray(xi, dtype=float).copy())
    return {k: np.asarray(v) for k, v in trace.items()}


def normalized_mse(readout, target):
    """Mean ``||r_o - xi||^2`` divided by the total variance of ``xi``."""
    readout = np.asarray(readout, dtype=float)
    target = np.asarray(target, dtype=float)
    err = np.mean(np.sum((readout - target) ** 2, axis=-1))
    var = np.sum(np.var(target, axis=0))
    if var == 0:
        return float("inf") if err > 0 else 0.0
    return float(err / var)
