"""
Anatomy of the three-factor update
==================================

The weight change of one layer factors into a Hebbian term ``beta`` built
from the current pre- and postsynaptic rates, and a per-neuron modulating
signal ``xi`` computed over the working-memory buffer. This script builds a
tiny network, fills a buffer and checks that ``beta * xi`` is the exact
gradient of the layer objective once past outputs are treated as constants.
"""

import numpy as np

from hsiclab.memory import Sample, SampleBuffer
from hsiclab.network import FeedforwardNet, forward_steady
from hsiclab.rules import RuleParams, full_gradient, three_factor_update

rng = np.random.default_rng(0)

# a 3-input, 2-neuron layer and a buffer of the last 5 presented samples
net = FeedforwardNet.build([3, 2], rng, noise_amp=0.0)
buffer = SampleBuffer(5)
for _ in range(5):
    x = rng.random(3)
    y = np.eye(2)[rng.integers(2)]
    buffer.push(Sample(x, y, forward_steady(net, x, noise=False)))

params = RuleParams(gamma=2.0, sigma_x=1.0, sigma_y=1.0, sigma_z=0.5, lr=0.1)

###############################################################################
# The local factor and the modulating signal
step = three_factor_update(net, 0, buffer, params)
print("beta (post x pre):\n", step.beta)
print("xi (one value per neuron):", step.xi)
print("applied dW:\n", step.delta_w)

###############################################################################
# Every row of dW is that neuron's row of beta scaled by its xi
print("row ratios dW / beta:\n", step.delta_w / step.beta)

###############################################################################
# Restricting the exact gradient to the current sample reproduces beta * xi
n = len(buffer)
restricted = full_gradient(buffer, 0, params, past_derivatives=False) * (n - 1) ** 2
print("max |restricted gradient - beta * xi|:",
      np.max(np.abs(restricted - step.beta * step.xi[:, None])))

# the full gradient also moves the past outputs, so it differs
print("max |full gradient - restricted|:",
      np.max(np.abs(full_gradient(buffer, 0, params) * (n - 1) ** 2 - restricted)))
