"""Power-law fit by least squares in log-log coordinates."""

from typing import NamedTuple

import numpy as np

from ..errors import InvalidFitInput, TooFewPoints


class PowerLawFit(NamedTuple):
    exponent: float
    prefactor: float
    r2: float

    def predict(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def power_law_fit(x, y):
    """Fit ``y = prefactor * x**exponent``; needs >= 3 strictly positive pairs."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidFitInput(f"x and y lengths differ: {x.size} vs {y.size}")
    if x.size < 3:
        raise TooFewPoints(f"need at least 3 points, got {x.size}", count=int(x.size))
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x * y)):
        raise InvalidFitInput("power-law fit needs finite, strictly positive coordinates")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(intercept)), float(r2))
