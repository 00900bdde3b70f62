"""
Stand-in MNIST files from the mlxtend digit sample
==================================================

Without the MNIST files, the MNIST configs can run on the 5000-digit sample
bundled with mlxtend (500 real digits per class). This script splits it 80/20
per class and writes IDX files with the standard MNIST names, then points
the loader at them through ``HSICLAB_DATA_DIR``.

Usage::

    python demos/make_mnist_proxy.py data/mnist-proxy
    HSICLAB_DATA_DIR=data/mnist-proxy hsiclab run --config configs/mnist_subset_desk.toml

The proxy train split has 1600 images of digits {0, 1, 2, 4}; set
``subsample = 1.0`` for runs on it.
"""

import sys
from pathlib import Path

import numpy as np
from mlxtend.data import mnist_data

from hsiclab.data import Dataset, load_mnist_idx, stratified_split, write_idx

out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/mnist-proxy")
out.mkdir(parents=True, exist_ok=True)

images, labels = mnist_data()
digits = Dataset(images.astype(np.uint8), labels.astype(int), 10)
train, test = stratified_split(digits, 0.2, np.random.default_rng(0))

names = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "t10k": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
for split, part in (("train", train), ("t10k", test)):
    write_idx(out / names[split][0], part.inputs.reshape(-1, 28, 28))
    write_idx(out / names[split][1], part.labels.astype(np.uint8))

###############################################################################
# Read the files back through the regular loader
check = load_mnist_idx(out / names["train"][0], out / names["train"][1])
print(f"wrote {len(train)} train / {len(test)} test digits to {out}")
print("per-class train counts:", np.bincount(check.labels).tolist())
