"""Command-line interface: ``hsiclab {run,sweep,reservoir-test,gradcheck}``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config

log = logging.getLogger("hsiclab")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="hsiclab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write its metrics CSV")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--output", type=Path, help="override the configured CSV path")

    sweep = sub.add_parser("sweep", help="grid over effective batch size and epoch count")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--batch-sizes", required=True, type=_int_list)
    sweep.add_argument("--epochs", required=True, type=_int_list)
    sweep.add_argument("--output", type=Path, help="override the configured grid CSV path")

    res = sub.add_parser("reservoir-test", help="reservoir signal-learning experiment")
    res.add_argument("--config", required=True, type=Path)
    res.add_argument("--output", type=Path)

    grad = sub.add_parser("gradcheck", help="check the learning rule against finite differences")
    grad.add_argument("--instances", type=int, default=20)
    grad.add_argument("--seed", type=int, default=0)
    return parser


def _output_path(args, config):
    if args.output is not None:
        return args.output
    return Path(config.output) if config.output else None


def _cmd_run(args):
    from .harness import emit_metrics, final_test_accuracy, run_experiment

    config = load_config(args.config)
    records = run_experiment(config)
    out = _output_path(args, config)
    if out is not None:
        emit_metrics(records, out)
        print(f"wrote {len(records)} rows to {out}")
    if config.task == "reservoir_signal":
        print("test nmse per trial:", " ".join(f"{r.objective:.4f}" for r in records))
    else:
        print(f"mean final test accuracy: {final_test_accuracy(records):.4f}")
    return 0


def _cmd_sweep(args):
    from .harness import run_sweep

    config = load_config(args.config)
    acc, norm = run_sweep(config, args.batch_sizes, args.epochs)
    lines = ["n_eff,epochs,accuracy,normalized"]
    for a, n in enumerate(args.batch_sizes):
        for b, e in enumerate(args.epochs):
            lines.append(f"{n},{e},{acc[a, b]!r},{norm[a, b]!r}")
    text = "\n".join(lines) + "\n"
    out = _output_path(args, config)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _cmd_reservoir(args):
    from .harness import MetricsRecord, emit_metrics, run_reservoir_signal

    config = load_config(args.config).with_(task="reservoir_signal")
    results = run_reservoir_signal(config)
    for r in results:
        print(f"trial {r['trial']}: train nmse {r['train_nmse']:.4f}  test nmse {r['test_nmse']:.4f}")
    out = _output_path(args, config)
    if out is not None:
        emit_metrics(
            [MetricsRecord(r["trial"], 0, 0, objective=r["test_nmse"], seconds=r["seconds"])
             for r in results],
            out,
        )
    return 0


def gradcheck(instances=20, seed=0, rtol=1e-5):
    """Compare the analytic rule against finite differences on random small problems.

    Returns a list of ``(name, worst_error, passed)`` tuples.
    """
    from .memory import Sample, SampleBuffer
    from .network import FeedforwardNet, forward_steady
    from .rules import RuleParams, full_gradient, finite_diff_gradient, three_factor_update

    rng = np.random.default_rng(seed)
    worst_fd = 0.0
    worst_red = 0.0
    for _ in range(instances):
        arch = [int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 4))]
        n = int(rng.integers(2, 8))
        net = FeedforwardNet.build(arch, rng, noise_amp=0.0)
        for layer in net.layers:
            layer.W *= 3.0
        params = RuleParams(
            gamma=float(rng.uniform(0, 5)), sigma_x=float(rng.uniform(0.5, 2)),
            sigma_y=float(rng.uniform(0.5, 2)), sigma_z=float(rng.uniform(0.5, 2)),
            lr=1.0,
        )
        buf = SampleBuffer(n)
        for _ in range(n):
            x = rng.uniform(-1, 1, arch[0])
            buf.push(Sample(x, np.eye(2)[rng.integers(2)], forward_steady(net, x, noise=False)))
        for l in range(len(net.layers)):
            g = full_gradient(buf, l, params, net=net)
            fd = finite_diff_gradient(buf, l, params, net)
            scale = max(np.max(np.abs(fd)), 1e-8)
            worst_fd = max(worst_fd, float(np.max(np.abs(g - fd)) / scale))

            restricted = full_gradient(buf, l, params, past_derivatives=False) * (n - 1) ** 2
            saved_w, saved_v = net.layers[l].W.copy(), net.layers[l].velocity.copy()
            dec = three_factor_update(net, l, buf, params)
            net.layers[l].W, net.layers[l].velocity = saved_w, saved_v
            rscale = max(np.max(np.abs(restricted)), 1e-12)
            worst_red = max(worst_red, float(np.max(np.abs(restricted - dec.beta * dec.xi[:, None])) / rscale))
    return [
        ("full gradient vs finite differences", worst_fd, worst_fd <= rtol),
        ("three-factor rule vs restricted gradient", worst_red, worst_red <= 1e-12),
    ]


def _cmd_gradcheck(args):
    ok = True
    for name, err, passed in gradcheck(args.instances, args.seed):
        print(f"{'PASS' if passed else 'FAIL'}  {name}: worst relative error {err:.2e}")
        ok &= passed
    return 0 if ok else 1


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "reservoir-test": _cmd_reservoir,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"hsiclab: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"hsiclab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
