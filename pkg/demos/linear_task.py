"""
A perceptron learns a linear boundary
=====================================

A single rate neuron receives two inputs and is trained with the analytic
modulating signal. The decision boundary of the dataset is known, so the
learned weight ratio can be compared with the boundary it should align to.
"""

import numpy as np

from hsiclab.config import ExperimentConfig
from hsiclab.harness import final_test_accuracy, run_experiment

config = ExperimentConfig(
    task="linear2d", arch=[2, 1], trials=1, epochs=50, n_eff=10, gamma=[5.0],
    lr_schedule=[[5e-3, None]], lr_decay_s=50.0, eval_every=10,
)
records = run_experiment(config)

###############################################################################
# The layer objective falls as the neuron aligns with the label
for r in records:
    if r.layer == 0 and r.epoch % 10 == 0:
        print(f"epoch {r.epoch:2d}  objective {r.objective:+.4f}")

###############################################################################
# Accuracy of a linear decoder on the neuron's rate, and the weight ratio.
# Inputs are rescaled from [-1, 1] to [0, 1], so a boundary a x1 + b x2 + c = 0
# keeps the ratio a / b in the rescaled coordinates.
a, b, _ = config.boundary
for r in records:
    if r.layer == -1:
        print(f"epoch {r.epoch:2d}  test accuracy {r.test_acc:.3f}  "
              f"w1/w2 {r.extras['weight_ratio']:+.3f}  (boundary a/b {a / b:+.3f})")
print("final test accuracy:", final_test_accuracy(records))
