"""Empirical 2-Wasserstein distances between equal-size samples.

On the line the monotone (sorted) coupling is optimal, so ``w2_1d`` is
exact. In higher dimension ``w2_assign`` solves the assignment problem
exactly; its cubic cost caps the support size.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .errors import EmptyDist, TooLarge, UnequalSupport

ASSIGN_MAX = 512
# operationalizes N >> (n1 / log n1)^2
SAMPLE_MARGIN = 10.0


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    samples: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] == 0:
            raise EmptyDist(f"need at least one sample, got array of shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def count(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]


def _dist(a):
    return a if isinstance(a, EmpiricalDist) else EmpiricalDist(a)


def _matched(a, b):
    a, b = _dist(a), _dist(b)
    if a.count != b.count:
        raise UnequalSupport(f"sample counts differ: {a.count} vs {b.count}", counts=[a.count, b.count])
    if a.dim != b.dim:
        raise ValueError(f"dimensions differ: {a.dim} vs {b.dim}")
    return a, b


def w2_1d(a, b):
    a, b = _matched(a, b)
    if a.dim != 1:
        raise ValueError("w2_1d needs one-dimensional samples")
    diff = np.sort(a.samples[:, 0]) - np.sort(b.samples[:, 0])
    return float(np.sqrt(np.mean(diff * diff)))


def w2_assign(a, b):
    a, b = _matched(a, b)
    if a.count > ASSIGN_MAX:
        raise TooLarge(f"{a.count} samples exceed the assignment cap of {ASSIGN_MAX}", count=a.count)
    diff = a.samples[:, None, :] - b.samples[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


def gaussian_w2(mu1, sd1, mu2, sd2):
    """W2 between ``N(mu1, sd1^2)`` and ``N(mu2, sd2^2)``."""
    if sd1 < 0 or sd2 < 0:
        raise ValueError("standard deviations must be nonnegative")
    return math.hypot(mu1 - mu2, sd1 - sd2)


def _ratio(n1):
    return (n1 / math.log(n1)) ** 2


def min_samples_for_width(n1, factor=SAMPLE_MARGIN):
    """Sample count needed at width ``n1``: ``ceil(factor * (n1 / ln n1)^2)``."""
    if n1 < 2:
        raise ValueError(f"width must be >= 2, got {n1}")
    return math.ceil(factor * _ratio(n1))


def max_width_for_samples(N, factor=1.0):
    """Largest width ``n1 >= e`` with ``factor * (n1 / ln n1)^2 <= N``.

    With ``factor=1`` and ``N = 10**4`` this is about 650.
    """
    target = N / factor
    if target < _ratio(math.e):
        raise ValueError(f"{N} samples admit no width on the increasing branch")
    hi = math.e
    while _ratio(hi) <= target:
        hi *= 2
    root = brentq(lambda w: _ratio(w) - target, math.e, hi, xtol=1e-9)
    return int(math.floor(root))
