"""Shallow-network neural tangent kernels, the limiting Gaussian process
``G_t`` of trained networks, and Wasserstein distances between the two."""

__version__ = "0.1.0"

from . import activations, bounds, errors, gp, kernels, lindyn, matops, network, ot, rng
from .activations import ACTIVATIONS, ActivationSpec, get_activation
from .errors import NTKGaussError
from .estimators import (
    LinearizedNetworkRegressor,
    NTKGaussianProcessRegressor,
    ShallowNetworkRegressor,
)
from .gp import GpMoments, LimitingGP, gp_band, gp_moments, sample_gp
from .network import Dataset, NetworkParams, empirical_ntk, forward, init_params, train_gd

__all__ = [
    "ACTIVATIONS",
    "ActivationSpec",
    "Dataset",
    "GpMoments",
    "LimitingGP",
    "LinearizedNetworkRegressor",
    "NTKGaussError",
    "NTKGaussianProcessRegressor",
    "NetworkParams",
    "ShallowNetworkRegressor",
    "activations",
    "bounds",
    "empirical_ntk",
    "errors",
    "forward",
    "get_activation",
    "gp",
    "gp_band",
    "gp_moments",
    "init_params",
    "kernels",
    "lindyn",
    "matops",
    "network",
    "ot",
    "rng",
    "sample_gp",
    "train_gd",
]
