"""
Smaller working memory, lower accuracy
======================================

The modulating signal is estimated from the last ``n_eff`` samples. With a
short memory the estimate is noisy. This sweep trains the same two-layer
network on the tanh task for several memory sizes and epoch counts and prints
the accuracy grid normalized by its best cell.
"""

import numpy as np

from hsiclab.config import ExperimentConfig
from hsiclab.harness import run_sweep

base = ExperimentConfig(
    task="tanh2d", arch=[2, 2, 1], trials=2, gamma=[20.0], input_range="signed",
    lr_schedule=[[5e-3, None]], eval_every=5,
)
n_eff_list = [2, 4, 10]
epochs_list = [5, 10, 20]
acc, normalized = run_sweep(base, n_eff_list, epochs_list)

print("n_eff \\ epochs " + "".join(f"{e:>8d}" for e in epochs_list))
for n, row in zip(n_eff_list, normalized):
    print(f"{n:>14d} " + "".join(f"{v:8.3f}" for v in row))
print("best accuracy:", np.max(acc))
