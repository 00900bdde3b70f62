"""Stand-in MNIST IDX files built from the 5000-digit sample bundled with mlxtend.

The sample holds 500 real MNIST digits per class. It is split 80/20 per class
and written with the standard MNIST file names, so the regular loader and the
``HSICLAB_DATA_DIR`` lookup are exercised unchanged.
"""

import numpy as np

from hsiclab.data import Dataset, stratified_split, write_idx

FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def write_proxy(out_dir, seed=0):
    from mlxtend.data import mnist_data

    images, labels = mnist_data()
    ds = Dataset(images.astype(np.uint8), labels.astype(int), 10)
    train, test = stratified_split(ds, 0.2, np.random.default_rng(seed))
    for split, part in (("train", train), ("test", test)):
        img_name, lbl_name = FILES[split]
        write_idx(out_dir / img_name, part.inputs.reshape(-1, 28, 28))
        write_idx(out_dir / lbl_name, part.labels.astype(np.uint8))
    return out_dir
