"""Working-memory sample buffer.

The buffer holds the last ``N`` presented samples, newest first, so slot ``p``
is the sample seen ``p`` presentations ago. Its capacity is the effective
batch size of the learning rules.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Sample", "SampleBuffer"]


@dataclass
class Sample:
    x: np.ndarray
    y: np.ndarray
    z: list = field(default_factory=list)  # per-layer rates, snapshot at presentation end
    tag: object = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.z = [np.asarray(zl, dtype=float) for zl in self.z]

    def shape_signature(self):
        return (self.x.shape, self.y.shape, tuple(zl.shape for zl in self.z))


class SampleBuffer:
    """Fixed-capacity FIFO of :class:`Sample`, indexed newest first."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._slots = deque(maxlen=self.capacity)

    def __len__(self):
        return len(self._slots)

    def __getitem__(self, p):
        """Sample from ``p`` presentations ago (``p = 0`` is the current one)."""
        return self._slots[p]

    def __iter__(self):
        return iter(self._slots)

    def push(self, sample):
        if self._slots and sample.shape_signature() != self._slots[0].shape_signature():
            raise ValueError(
                f"sample shapes {sample.shape_signature()} do not match buffer "
                f"contents {self._slots[0].shape_signature()}"
            )
        self._slots.appendleft(sample)

    def is_warm(self):
        return len(self._slots) == self.capacity

    def clear(self):
        self._slots.clear()

    def newest(self, k):
        """The ``k`` newest samples, newest first."""
        if k > len(self._slots):
            raise ValueError(f"requested {k} samples, buffer holds {len(self._slots)}")
        return [self._slots[p] for p in range(k)]

    def xs(self):
        return np.stack([s.x for s in self._slots])

    def ys(self):
        return np.stack([s.y for s in self._slots])

    def zs(self, layer):
        return np.stack([s.z[layer] for s in self._slots])

    def inputs_to(self, layer):
        """Presynaptic rates of ``layer``: ``x`` for the first layer, else ``z[layer - 1]``."""
        return self.xs() if layer == 0 else self.zs(layer - 1)
