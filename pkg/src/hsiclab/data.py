"""Datasets: synthetic 2-D tasks, MNIST IDX files and subsampling helpers.

Every produced dataset has inputs in ``[0, 1]`` (rate-coded).
"""

import gzip
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "IdxError",
    "IdxMagicError",
    "IdxTruncatedError",
    "IdxCountMismatchError",
    "one_hot",
    "gen_linear2d",
    "gen_tanh2d",
    "label_tanh2d",
    "gen_uniform_signals",
    "read_idx",
    "write_idx",
    "load_mnist_idx",
    "find_mnist",
    "stratified_subsample",
    "stratified_split",
    "filter_digits",
    "DATA_DIR_ENV",
]

DATA_DIR_ENV = "HSICLAB_DATA_DIR"
IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.inputs.ndim != 2:
            self.inputs = self.inputs.reshape(len(self.labels), -1)
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("inputs and labels have different lengths")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels out of range")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    @property
    def encoded_labels(self):
        return one_hot(self.labels, self.n_classes)

    def take(self, idx):
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.inputs[idx], self.labels[idx], self.n_classes, dict(self.meta))


def _rescale_unit(points):
    return (points + 1.0) / 2.0


def _encode(points, unit_range):
    return _rescale_unit(points) if unit_range else points.copy()


def gen_linear2d(n=100, boundary=(0.5, 1.0, -0.1), rng=None, unit_range=True):
    """Points in ``[-1, 1]^2`` labelled by the side of ``a x1 + b x2 + c = 0``.

    Label 1 where ``a x1 + b x2 + c >= 0``. Inputs are rescaled to ``[0, 1]^2``
    unless ``unit_range`` is false; the boundary coefficients stay in the
    original coordinates (``meta``).
    """
    a, b, c = (float(v) for v in boundary)
    if a == 0 and b == 0:
        raise ValueError("degenerate boundary: a and b are both zero")
    rng = np.random.default_rng() if rng is None else rng
    points = rng.uniform(-1.0, 1.0, size=(n, 2))
    labels = (a * points[:, 0] + b * points[:, 1] + c >= 0).astype(int)
    return Dataset(
        _encode(points, unit_range), labels, 2,
        meta={"raw": points, "boundary": (a, b, c), "task": "linear2d"},
    )


def label_tanh2d(points):
    return (points[:, 1] >= np.tanh(3.0 * points[:, 0])).astype(int)


def gen_tanh2d(n=100, rng=None, unit_range=True):
    """Points in ``[-1, 1]^2`` labelled 1 on or above ``x2 = tanh(3 x1)``.

    Inputs are rescaled to ``[0, 1]^2`` unless ``unit_range`` is false. Layers
    have no bias, so with unit-range inputs every hidden boundary is a line
    through the corner ``(-1, -1)`` of the original square.
    """
    rng = np.random.default_rng() if rng is None else rng
    points = rng.uniform(-1.0, 1.0, size=(n, 2))
    return Dataset(
        _encode(points, unit_range), label_tanh2d(points), 2,
        meta={"raw": points, "task": "tanh2d"},
    )


def gen_uniform_signals(n=100, dims=(100, 1, 10), rng=None):
    """Independent ``Unif(0, 1)`` sample sets, one ``(n, d)`` array per entry of ``dims``."""
    rng = np.random.default_rng() if rng is None else rng
    return tuple(rng.random((n, d)) for d in dims)


class IdxError(ValueError):
    """Malformed IDX file."""


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxCountMismatchError(IdxError):
    pass


def _read_bytes(path):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, expected_magic=None):
    """Parse an unsigned-byte IDX file into an array of shape ``dims``."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if expected_magic is not None and magic != expected_magic:
        raise IdxMagicError(f"{path}: magic {magic} != expected {expected_magic}")
    if magic >> 8 != 0x08:
        raise IdxMagicError(f"{path}: unsupported IDX data type in magic {magic:#010x}")
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise IdxTruncatedError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    size = int(np.prod(dims)) if dims else 0
    if len(raw) - header_end < size:
        raise IdxTruncatedError(
            f"{path}: expected {size} data bytes, found {len(raw) - header_end}"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header_end).reshape(dims)


def write_idx(path, array):
    """Write a uint8 array as an IDX file (gzip-compressed if ``path`` ends in .gz)."""
    array = np.asarray(array)
    if array.dtype != np.uint8:
        if array.min() < 0 or array.max() > 255:
            raise ValueError("IDX unsigned-byte data must lie in [0, 255]")
        array = array.astype(np.uint8)
    header = struct.pack(">I", 0x0800 | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    payload = header + array.tobytes()
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        fh.write(payload)


def load_mnist_idx(images_path, labels_path):
    """Load an MNIST image/label file pair; pixels scaled by 1/255 and flattened."""
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IdxCountMismatchError(
            f"{images_path} has {images.shape[0]} images but {labels_path} "
            f"has {labels.shape[0]} labels"
        )
    inputs = images.reshape(images.shape[0], -1).astype(float) / 255.0
    labels = labels.astype(int)
    n_classes = max(10, int(labels.max()) + 1) if labels.size else 10
    return Dataset(inputs, labels, n_classes, meta={"source": str(images_path)})


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def find_mnist(data_dir=None, split="train"):
    """Locate the IDX pair for ``split`` under ``data_dir`` or ``$HSICLAB_DATA_DIR``.

    Plain and ``.gz`` file names are both accepted. Raises FileNotFoundError
    naming the searched directory.
    """
    base = data_dir if data_dir is not None else os.environ.get(DATA_DIR_ENV, "data/mnist")
    base = Path(base)
    found = []
    for stem in _MNIST_FILES[split]:
        for candidate in (base / stem, base / f"{stem}.gz"):
            if candidate.exists():
                found.append(candidate)
                break
        else:
            raise FileNotFoundError(f"MNIST file {stem}[.gz] not found in {base}")
    return tuple(found)


def stratified_subsample(ds, fraction, rng):
    """Keep ``round(fraction * count)`` samples of every class, in shuffled order."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    keep = []
    for cls in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == cls)
        k = int(round(fraction * idx.size))
        keep.append(rng.choice(idx, size=k, replace=False))
    keep = np.concatenate(keep) if keep else np.array([], dtype=int)
    return ds.take(rng.permutation(keep))


def stratified_split(ds, test_fraction, rng):
    """Disjoint stratified (train, test) split."""
    test = []
    for cls in np.unique(ds.labels):
        idx = rng.permutation(np.flatnonzero(ds.labels == cls))
        test.append(idx[: int(round(test_fraction * idx.size))])
    test = np.concatenate(test)
    train = np.setdiff1d(np.arange(len(ds)), test)
    return ds.take(rng.permutation(train)), ds.take(rng.permutation(test))


def filter_digits(ds, keep):
    """Restrict to labels in ``keep`` and remap them to ``0..len(keep)-1`` ascending."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one label")
    mask = np.isin(ds.labels, keep)
    if not mask.any():
        raise ValueError(f"no samples with labels in {keep}")
    remap = {old: new for new, old in enumerate(keep)}
    labels = np.array([remap[v] for v in ds.labels[mask]], dtype=int)
    meta = dict(ds.meta, kept_labels=keep)
    return Dataset(ds.inputs[mask], labels, len(keep), meta)
