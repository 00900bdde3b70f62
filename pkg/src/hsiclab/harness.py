"""Experiment orchestration: datasets, training loops, metrics and sweeps."""

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as datamod
from .baselines import BackpropNet, PhsicParams, backprop_train_step, phsic_update
from .kernels import hsic_objective, median_sigma
from .memory import Sample, SampleBuffer
from .network import FeedforwardNet, LinearDecoder, forward_dynamical, forward_steady, forward_steady_batch
from .reservoir import (
    normalized_mse,
    reservoir_init,
    reservoir_step,
    rm_hebb_update,
    train_reservoir,
)
from .rules import RuleParams, centered_column, three_factor_update, xi_from_arrays, xi_from_bracket

__all__ = [
    "MetricsRecord",
    "CSV_HEADER",
    "build_datasets",
    "run_experiment",
    "run_reservoir_signal",
    "run_sweep",
    "emit_metrics",
    "read_metrics",
    "final_test_accuracy",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("trial", "epoch", "layer", "objective", "train_acc", "test_acc", "seconds")


@dataclass
class MetricsRecord:
    trial: int
    epoch: int
    layer: int  # -1 marks an accuracy row
    objective: float = None
    train_acc: float = None
    test_acc: float = None
    seconds: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    def csv_row(self):
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [
            str(self.trial), str(self.epoch), str(self.layer),
            fmt(self.objective), fmt(self.train_acc), fmt(self.test_acc), fmt(self.seconds),
        ]


def emit_metrics(records, path):
    """Write records as CSV (UTF-8, LF line endings)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for rec in records:
                writer.writerow(rec.csv_row())
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc


def read_metrics(path):
    def num(v):
        return None if v == "" else float(v)

    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            MetricsRecord(int(t), int(e), int(l), num(o), num(tr), num(te), float(s))
            for t, e, l, o, tr, te, s in reader
        ]


def final_test_accuracy(records):
    """Mean over trials of the test accuracy at each trial's last evaluated epoch."""
    last = {}
    for rec in records:
        if rec.layer == -1 and rec.test_acc is not None:
            if rec.trial not in last or rec.epoch >= last[rec.trial].epoch:
                last[rec.trial] = rec
    if not last:
        return float("nan")
    return float(np.mean([r.test_acc for r in last.values()]))


def build_datasets(config, rng):
    """``(train, test)`` datasets for the configured task."""
    unit = config.input_range == "unit"
    if config.task == "linear2d":
        return (
            datamod.gen_linear2d(config.n_train, config.boundary, rng, unit_range=unit),
            datamod.gen_linear2d(config.n_test, config.boundary, rng, unit_range=unit),
        )
    if config.task == "tanh2d":
        return (
            datamod.gen_tanh2d(config.n_train, rng, unit_range=unit),
            datamod.gen_tanh2d(config.n_test, rng, unit_range=unit),
        )
    if config.task in ("mnist", "mnist_subset"):
        data_dir = config.data_dir or None
        train = datamod.load_mnist_idx(*datamod.find_mnist(data_dir, "train"))
        test = datamod.load_mnist_idx(*datamod.find_mnist(data_dir, "test"))
        if config.task == "mnist_subset":
            train = datamod.filter_digits(train, config.digits)
            test = datamod.filter_digits(test, config.digits)
        if config.subsample < 1:
            train = datamod.stratified_subsample(train, config.subsample, rng)
        return train, test
    raise ValueError(f"task {config.task!r} has no classification dataset")


def _trial_rng(config, trial, *stream):
    return np.random.default_rng([config.seed, trial, *stream])


def _lr(config, epoch, t_sim):
    lr = config.lr_at(epoch)
    if config.lr_decay_s > 0:
        lr = lr / (1.0 + t_sim / config.lr_decay_s)
    return lr


def _rates_for(config, net, x, rng):
    if config.mode == "dynamical":
        return forward_dynamical(net, x, config.presentation_ms, rng)
    return forward_steady(net, x, rng)


def _evaluate(config, net, train, test, rng):
    """Fit a fresh linear decoder on final-layer rates; returns (train_acc, test_acc)."""
    f_train = forward_steady_batch(net, train.inputs, rng, noise=config.eval_noise)[-1]
    decoder = LinearDecoder.zeros(train.n_classes, f_train.shape[1])
    decoder.fit(f_train, train.encoded_labels, config.decoder_epochs, config.decoder_lr)
    f_test = forward_steady_batch(net, test.inputs, rng, noise=config.eval_noise)[-1]
    return decoder.accuracy(f_train, train.labels), decoder.accuracy(f_test, test.labels)


def _objectives(config, net, train, sig, rng):
    m = min(config.objective_samples, len(train))
    if m < 2:
        return [None] * config.n_layers
    xs = train.inputs[:m]
    ys = train.encoded_labels[:m]
    rates = forward_steady_batch(net, xs, rng, noise=config.eval_noise)
    return [
        hsic_objective(xs, ys, z, g, sig["x"], sig["y"], sz)
        for z, g, sz in zip(rates, config.gammas(), sig["z"])
    ]


def _pick_sigmas(config, buffer):
    sig_z = list(config.sigma_z)
    if len(sig_z) == 1:
        sig_z = sig_z * config.n_layers
    if not sig_z:
        sig_z = [median_sigma(buffer.zs(l)) for l in range(config.n_layers)]
    return {
        "x": config.sigma_x or median_sigma(buffer.xs()),
        "y": config.sigma_y or median_sigma(buffer.ys()),
        "z": [float(s) for s in sig_z],
    }


class _ReservoirBank:
    """One reservoir per layer, fed ``[x; y; z_l]`` and read out as that layer's xi."""

    def __init__(self, config, net, y_dim, rng):
        self.params = config.reservoir
        self.rng = rng
        self.states = [
            reservoir_init(self.params, net.arch[0] + y_dim + layer.out_dim, layer.out_dim, rng)
            for layer in net.layers
        ]
        self.ticks = max(1, int(round(self.params.sample_ms / self.params.dt)))
        self.t = 0.0

    def present(self, sample, teachers=None):
        """Run one sample period; with ``teachers`` the readouts learn. Returns the readouts."""
        out = []
        for l, state in enumerate(self.states):
            inp = np.concatenate([sample.x, sample.y, sample.z[l]])
            for k in range(self.ticks):
                r_o = reservoir_step(state, inp, self.params, self.rng)
                if teachers is not None:
                    t = self.t + (k + 1) * self.params.dt / 1000.0
                    rm_hebb_update(state, teachers[l], t, self.params)
            out.append(r_o.copy())
        if teachers is not None:
            self.t += self.ticks * self.params.dt / 1000.0
        return out


def _pretrain_reservoirs(config, net, bank, buffer, train, Y, sig, rng):
    """Warm-up (no plasticity) then pre-training against the analytic xi; network frozen."""
    sample_s = bank.params.sample_ms / 1000.0
    n_warm = int(round(config.warmup_s / sample_s))
    n_pre = int(round(config.pretrain_s / sample_s))
    order = np.array([], dtype=int)
    for k in range(n_warm + n_pre):
        if order.size == 0:
            order = rng.permutation(len(train))
        i, order = order[0], order[1:]
        x = train.inputs[i]
        sample = Sample(x, Y[i], _rates_for(config, net, x, rng))
        buffer.push(sample)
        if k < n_warm or not buffer.is_warm():
            bank.present(sample)
            continue
        teachers = [
            xi_from_arrays(buffer.xs(), buffer.ys(), buffer.zs(l), g, sig["x"], sig["y"], sz)
            for l, (g, sz) in enumerate(zip(config.gammas(), sig["z"]))
        ]
        bank.present(sample, teachers)


def _run_hsic_trial(config, trial, train, test, eval_epochs):
    rng = _trial_rng(config, trial, 0)
    net = FeedforwardNet.build(
        config.arch, rng, tau_ff=config.tau_ff, noise_amp=config.noise_amp, dt=config.dt
    )
    Y = train.encoded_labels
    buffer = SampleBuffer(config.n_eff)
    gammas = config.gammas()
    start = time.perf_counter()

    # fill the working memory before any plasticity
    for i in rng.permutation(len(train))[: config.n_eff]:
        x = train.inputs[i]
        buffer.push(Sample(x, Y[i], _rates_for(config, net, x, rng)))
    sig = _pick_sigmas(config, buffer)
    log.debug("trial %d sigmas: %s", trial, sig)

    bank = None
    if config.rule == "ours_reservoir":
        bank = _ReservoirBank(config, net, Y.shape[1], rng)
        _pretrain_reservoirs(config, net, bank, buffer, train, Y, sig, rng)

    records = []

    def record(epoch):
        eval_rng = _trial_rng(config, trial, 1, epoch)
        secs = time.perf_counter() - start
        for l, obj in enumerate(_objectives(config, net, train, sig, eval_rng)):
            records.append(MetricsRecord(trial, epoch, l, objective=obj, seconds=secs))
        if epoch in eval_epochs:
            tr_acc, te_acc = _evaluate(config, net, train, test, eval_rng)
            extras = {}
            if config.arch[-2:] == [2, 1] and len(config.arch) == 2:
                w = net.layers[0].W[0]
                extras["weight_ratio"] = float(w[0] / w[1]) if w[1] != 0 else float("inf")
            records.append(
                MetricsRecord(trial, epoch, -1, train_acc=tr_acc, test_acc=te_acc,
                              seconds=secs, extras=extras)
            )

    record(0)
    t_sim = 0.0
    for epoch in range(config.epochs):
        for i in rng.permutation(len(train)):
            x = train.inputs[i]
            sample = Sample(x, Y[i], _rates_for(config, net, x, rng))
            buffer.push(sample)
            t_sim += config.presentation_ms / 1000.0
            lr = _lr(config, epoch, t_sim)
            if config.rule == "phsic":
                for l in range(config.n_layers):
                    params = PhsicParams(gammas[l], sig["z"][l], sig["y"], config.phsic_batch,
                                         lr, config.momentum)
                    phsic_update(net, l, buffer, params)
                continue
            if bank is not None:
                xis = bank.present(sample)
            else:
                xs, ys = buffer.xs(), buffer.ys()
                bx = centered_column(xs, sig["x"])
                by = centered_column(ys, sig["y"])
                xis = [
                    xi_from_bracket(bx - g * by, buffer.zs(l), sz)
                    for l, (g, sz) in enumerate(zip(gammas, sig["z"]))
                ]
            for l in range(config.n_layers):
                params = RuleParams(gammas[l], sig["x"], sig["y"], sig["z"][l], lr, config.momentum)
                three_factor_update(net, l, buffer, params, xi=xis[l])
        record(epoch + 1)
    return records


def _run_backprop_trial(config, trial, train, test, eval_epochs):
    rng = _trial_rng(config, trial, 0)
    net = BackpropNet(config.arch, rng)
    Y = train.encoded_labels
    start = time.perf_counter()
    records = []

    def record(epoch, loss=None):
        if epoch in eval_epochs:
            records.append(MetricsRecord(
                trial, epoch, -1,
                train_acc=net.accuracy(train.inputs, train.labels),
                test_acc=net.accuracy(test.inputs, test.labels),
                seconds=time.perf_counter() - start,
                extras={} if loss is None else {"loss": loss},
            ))

    record(0)
    bs = config.backprop_batch
    for epoch in range(config.epochs):
        order = rng.permutation(len(train))
        losses = []
        for k in range(0, len(order), bs):
            idx = order[k:k + bs]
            losses.append(backprop_train_step(
                net, train.inputs[idx], Y[idx], config.lr_at(epoch), config.momentum
            ))
        record(epoch + 1, float(np.mean(losses)))
    return records


def run_reservoir_signal(config):
    """Reservoir-only signal learning: train the readout on the analytic xi, then test.

    Random ``Unif(0, 1)`` sets X, Y, Z are presented in a fixed cyclic order,
    each for ``sample_ms``. Returns one dict per trial with the train-end and
    test-phase normalized MSE and the recorded traces.
    """
    params = config.reservoir
    results = []
    for trial in range(config.trials):
        rng = _trial_rng(config, trial, 0)
        X, Yv, Z = datamod.gen_uniform_signals(config.n_signals, config.signal_dims, rng)
        n = config.n_eff
        gamma = config.gammas()[0]
        sx = config.sigma_x or median_sigma(X[:n])
        sy = config.sigma_y or median_sigma(Yv[:n])
        sz = config.sigma_z[0] if config.sigma_z else median_sigma(Z[:n])

        def source():
            window = []
            k = 0
            while True:
                i = k % config.n_signals
                k += 1
                window.insert(0, i)
                del window[n:]
                if len(window) < n:
                    continue
                xi = xi_from_arrays(X[window], Yv[window], Z[window], gamma, sx, sy, sz)
                yield np.concatenate([X[i], Yv[i], Z[i]]), xi

        state = reservoir_init(params, X.shape[1] + Yv.shape[1] + Z.shape[1], Z.shape[1], rng)
        signal = source()
        start = time.perf_counter()
        train_trace = train_reservoir(state, signal, config.train_s, params, rng, learn=True,
                                      record_every=10)
        test_trace = train_reservoir(state, signal, config.test_s, params, rng, learn=False,
                                     t0=config.train_s)
        tail = max(1, len(train_trace["t"]) // 10)
        results.append({
            "trial": trial,
            "train_nmse": normalized_mse(train_trace["readout"][-tail:], train_trace["target"][-tail:]),
            "test_nmse": normalized_mse(test_trace["readout"], test_trace["target"]),
            "gate_rate": float(np.mean(train_trace["gate"])),
            "seconds": time.perf_counter() - start,
            "train_trace": train_trace,
            "test_trace": test_trace,
        })
    return results


def run_experiment(config, eval_epochs=None):
    """Run every trial of ``config``; returns a list of :class:`MetricsRecord`.

    ``eval_epochs`` selects the epochs (0 = before training) at which a decoder
    is fit and accuracies are recorded; by default every ``eval_every``-th epoch
    and the last one. For ``reservoir_signal`` one row per trial is returned with
    ``objective`` holding the test-phase normalized MSE.
    """
    if config.task == "reservoir_signal":
        return [
            MetricsRecord(r["trial"], 0, 0, objective=r["test_nmse"], seconds=r["seconds"],
                          extras={"train_nmse": r["train_nmse"]})
            for r in run_reservoir_signal(config)
        ]
    if eval_epochs is None:
        every = max(1, config.eval_every)
        eval_epochs = set(range(0, config.epochs + 1, every)) | {config.epochs}
    eval_epochs = set(eval_epochs)
    runner = _run_backprop_trial if config.rule == "backprop" else _run_hsic_trial
    records = []
    for trial in range(config.trials):
        train, test = build_datasets(config, _trial_rng(config, trial, 2))
        recs = runner(config, trial, train, test, eval_epochs)
        log.info("trial %d final test accuracy %.4f", trial, final_test_accuracy(recs))
        records.extend(recs)
    return records


def run_sweep(base_config, n_eff_list, epochs_list):
    """Final test accuracy for every ``(n_eff, epochs)`` cell.

    Each ``n_eff`` row is trained once for ``max(epochs_list)`` epochs and read
    out at every listed epoch; training does not depend on evaluation, so this
    equals running each cell separately. Returns ``(accuracy, normalized)``
    arrays of shape ``(len(n_eff_list), len(epochs_list))``; ``normalized``
    divides by the grid maximum.
    """
    if not n_eff_list or not epochs_list:
        raise ValueError("sweep grid must be nonempty")
    acc = np.zeros((len(n_eff_list), len(epochs_list)))
    for a, n_eff in enumerate(n_eff_list):
        config = base_config.with_(n_eff=int(n_eff), epochs=int(max(epochs_list)))
        records = run_experiment(config, eval_epochs=set(int(e) for e in epochs_list))
        for b, epochs in enumerate(epochs_list):
            acc[a, b] = final_test_accuracy([r for r in records if r.epoch == int(epochs)])
    top = np.nanmax(acc)
    normalized = acc / top if top > 0 else np.full_like(acc, np.nan)
    return acc, normalized
