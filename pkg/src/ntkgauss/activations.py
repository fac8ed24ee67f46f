"""Activation functions with their sup-norms and Lipschitz constants.

The constants are the quantities entering the width condition in
``ntkgauss.bounds``; ``bounds.activation_norms`` audits them numerically.
ReLU is available for experiments but has no finite sup-norms, so its
constants are ``None`` and ``bounded`` is False.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import erf, expit

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class ActivationSpec:
    name: str
    phi: Callable
    dphi: Callable
    sup_phi: Optional[float]
    sup_dphi: Optional[float]
    lip_phi: Optional[float]
    lip_dphi: Optional[float]

    @property
    def bounded(self):
        """True when all four norm constants are finite (bounded, Lipschitz Phi and Phi')."""
        return None not in (self.sup_phi, self.sup_dphi, self.lip_phi, self.lip_dphi)

    def __repr__(self):
        return f"ActivationSpec({self.name!r})"


def _dtanh(z):
    return 1.0 - np.square(np.tanh(z))


def _dsigmoid(z):
    s = expit(z)
    return s * (1.0 - s)


def _derf(z):
    return 2.0 / SQRT_PI * np.exp(-np.square(z))


def _relu(z):
    return np.maximum(z, 0.0)


def _drelu(z):
    # derivative at the kink is taken to be 0
    return (np.asarray(z) > 0).astype(float)


TANH = ActivationSpec(
    "tanh", np.tanh, _dtanh,
    sup_phi=1.0, sup_dphi=1.0, lip_phi=1.0,
    lip_dphi=4.0 / (3.0 * np.sqrt(3.0)),  # max |tanh''| at tanh(z) = 1/sqrt(3)
)
SIGMOID = ActivationSpec(
    "sigmoid", expit, _dsigmoid,
    sup_phi=1.0, sup_dphi=0.25, lip_phi=0.25,
    lip_dphi=np.sqrt(3.0) / 18.0,  # max |s(1-s)(1-2s)| at s = (3 - sqrt 3)/6
)
ERF = ActivationSpec(
    "erf", erf, _derf,
    sup_phi=1.0, sup_dphi=2.0 / SQRT_PI, lip_phi=2.0 / SQRT_PI,
    lip_dphi=2.0 * np.sqrt(2.0) / SQRT_PI * np.exp(-0.5),  # at z = 1/sqrt 2
)
RELU = ActivationSpec("relu", _relu, _drelu, None, None, None, None)

ACTIVATIONS = {a.name: a for a in (TANH, SIGMOID, ERF, RELU)}


def get_activation(act):
    """Look up an activation by name; ActivationSpec instances pass through."""
    if isinstance(act, ActivationSpec):
        return act
    try:
        return ACTIVATIONS[str(act).lower()]
    except KeyError:
        raise ValueError(
            f"unknown activation {act!r}; choose from {sorted(ACTIVATIONS)}"
        ) from None
