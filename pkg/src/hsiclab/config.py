"""Experiment configuration files.

Configs are TOML documents with a fixed set of sections; every key is
optional except ``experiment.task``. Unknown sections or keys are rejected.
"""

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .reservoir import ReservoirParams

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "parse_config", "TASKS", "RULES"]

TASKS = ("reservoir_signal", "linear2d", "tanh2d", "mnist", "mnist_subset")
RULES = ("ours_reservoir", "ours_analytic", "phsic", "backprop")
MODES = ("steady", "dynamical")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    # [experiment]
    task: str = "linear2d"
    rule: str = "ours_analytic"
    seed: int = 0
    trials: int = 4
    output: str = ""
    # [network]
    arch: list = field(default_factory=lambda: [2, 1])
    tau_ff: float = 5.0  # ms
    noise_amp: float = 0.05
    mode: str = "steady"
    dt: float = 1.0  # ms
    presentation_ms: float = 50.0
    # [training]
    n_eff: int = 10
    gamma: list = field(default_factory=lambda: [5.0])
    sigma_x: float = 0.0  # 0 selects the median heuristic
    sigma_y: float = 0.0
    sigma_z: list = field(default_factory=list)
    epochs: int = 50
    lr_schedule: list = field(default_factory=lambda: [[5e-3, None]])
    lr_decay_s: float = 0.0  # 0 disables the eta0 / (1 + t / tau) decay
    momentum: float = 0.0
    objective_samples: int = 100
    eval_every: int = 1
    eval_noise: bool = True
    phsic_batch: int = 2
    backprop_batch: int = 32
    # [data]
    n_train: int = 100
    n_test: int = 1000
    boundary: list = field(default_factory=lambda: [0.5, 1.0, -0.1])
    input_range: str = "unit"  # synthetic inputs in [0, 1] ("unit") or [-1, 1] ("signed")
    data_dir: str = ""
    digits: list = field(default_factory=lambda: [0, 1, 2, 4])
    subsample: float = 1.0
    n_signals: int = 100
    signal_dims: list = field(default_factory=lambda: [100, 1, 10])
    # [decoder]
    decoder_epochs: int = 1000
    decoder_lr: float = 0.1
    # [reservoir]
    reservoir: ReservoirParams = field(default_factory=ReservoirParams)
    warmup_s: float = 50.0
    pretrain_s: float = 500.0
    train_s: float = 500.0
    test_s: float = 100.0

    def __post_init__(self):
        self.validate()

    @property
    def n_layers(self):
        return len(self.arch) - 1

    def gammas(self):
        g = list(self.gamma)
        if len(g) == 1:
            g = g * self.n_layers
        return g

    def lr_at(self, epoch):
        """Learning rate in effect during ``epoch`` (0-based) from the segment list."""
        start = 0
        for value, span in self.lr_schedule:
            if span is None or epoch < start + span:
                return float(value)
            start += span
        return float(self.lr_schedule[-1][0])

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if len(self.arch) < 2 or any(int(w) < 1 for w in self.arch):
            raise ConfigError(f"arch must list at least two positive widths, got {self.arch}")
        if self.task in ("linear2d", "tanh2d") and self.arch[0] != 2:
            raise ConfigError(f"task {self.task} has 2-D inputs but arch starts with {self.arch[0]}")
        if self.task in ("mnist", "mnist_subset") and self.arch[0] != 784:
            raise ConfigError(f"task {self.task} has 784-D inputs but arch starts with {self.arch[0]}")
        if len(self.gamma) not in (1, self.n_layers):
            raise ConfigError("gamma needs one value or one per layer")
        if self.sigma_z and len(self.sigma_z) not in (1, self.n_layers):
            raise ConfigError("sigma_z needs one value or one per layer")
        if self.n_eff < 1:
            raise ConfigError("n_eff must be >= 1")
        if self.rule == "phsic" and self.n_eff < self.phsic_batch:
            raise ConfigError("n_eff must be at least phsic_batch for the phsic rule")
        if self.epochs < 0 or self.trials < 1:
            raise ConfigError("epochs must be >= 0 and trials >= 1")
        if not self.lr_schedule:
            raise ConfigError("lr_schedule needs at least one segment")
        covered = 0
        for k, seg in enumerate(self.lr_schedule):
            if len(seg) != 2:
                raise ConfigError(f"lr segment {seg} must be [value, epochs]")
            value, span = seg
            if value < 0:
                raise ConfigError("learning rates must be nonnegative")
            if span is None:
                if k != len(self.lr_schedule) - 1:
                    raise ConfigError("only the last lr segment may be open-ended")
                covered = None
            else:
                covered += int(span)
        if covered is not None and covered < self.epochs:
            raise ConfigError(
                f"lr_schedule covers {covered} epochs but {self.epochs} are configured"
            )
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.dt > self.tau_ff:
            raise ConfigError("dt must not exceed tau_ff")
        if self.input_range not in ("unit", "signed"):
            raise ConfigError(f"input_range must be 'unit' or 'signed', got {self.input_range!r}")
        if not 0 < self.subsample <= 1:
            raise ConfigError("subsample must lie in (0, 1]")

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


# section -> keys accepted in that section of a config file
SECTIONS = {
    "experiment": ("task", "rule", "seed", "trials", "output"),
    "network": ("arch", "tau_ff", "noise_amp", "mode", "dt", "presentation_ms"),
    "training": (
        "n_eff", "gamma", "sigma_x", "sigma_y", "sigma_z", "epochs", "lr_schedule",
        "lr_decay_s", "momentum", "objective_samples", "eval_every", "eval_noise",
        "phsic_batch", "backprop_batch",
    ),
    "data": (
        "n_train", "n_test", "boundary", "input_range", "data_dir", "digits", "subsample",
        "n_signals", "signal_dims",
    ),
    "decoder": ("decoder_epochs", "decoder_lr"),
    "reservoir": tuple(f.name for f in fields(ReservoirParams))
    + ("warmup_s", "pretrain_s", "train_s", "test_s"),
}


def _normalize_schedule(raw):
    # TOML has no null; an open-ended final segment is written with span 0 or -1
    out = []
    for value, span in raw:
        out.append([float(value), None if span is None or span <= 0 else int(span)])
    return out


def parse_config(doc, base_dir=None):
    """Build an :class:`ExperimentConfig` from a parsed TOML mapping."""
    flat = {}
    res = {}
    for section, body in doc.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            if section == "reservoir" and key in {f.name for f in fields(ReservoirParams)}:
                res[key] = value
            else:
                flat[key] = value
    if "lr_schedule" in flat:
        flat["lr_schedule"] = _normalize_schedule(flat["lr_schedule"])
    for key in ("gamma", "sigma_z"):
        if key in flat and not isinstance(flat[key], list):
            flat[key] = [flat[key]]
    if base_dir is not None and flat.get("output") and not Path(flat["output"]).is_absolute():
        flat["output"] = str(Path(base_dir) / flat["output"])
    try:
        if res:
            flat["reservoir"] = ReservoirParams(**res)
        return ExperimentConfig(**flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)
