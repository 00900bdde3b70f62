"""Three-factor HSIC-bottleneck learning for LIF rate networks.

Submodules
----------
kernels    Gaussian kernels, the HSIC estimator and the layer objective.
network    LIF rate layers, forward simulation and the linear decoder.
memory     Working-memory sample buffer.
rules      Three-factor update, full gradient and finite-difference oracle.
reservoir  Chaotic reservoir with reward-modulated Hebbian readout.
baselines  Backpropagation MLP and the two-sample pHSIC rule.
data       Synthetic tasks and MNIST IDX loading.
config     TOML experiment configuration.
harness    Training loops, metrics CSV and sweeps.
cli        Command-line entry point.
"""

__version__ = "0.1.0"
