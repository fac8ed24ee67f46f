"""Infinite-width kernels of the shallow network.

``K~(x, x') = x.x'/n0`` is the input kernel, ``K`` the NNGP kernel
``E[Phi(u) Phi(v)]`` with ``(u, v) ~ N(0, T(x, x'))`` and ``k_inf`` the
limiting NTK ``K + K~ E[Phi'(u) Phi'(v)]``.

Bivariate Gaussian expectations use probabilists' Gauss-Hermite quadrature
after factoring ``T = L L^T``. When ``T`` is rank-deficient (``x' = 0``,
``x' = x``, and every pair when ``n0 = 1``) the expectation is one
dimensional; that case uses a 1D rule carrying the same node budget as the
tensor rule (``order**2`` nodes). Both rules are refined as the variances
grow, which keeps sharp activations accurate at large input scales.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import roots_hermitenorm

from .activations import get_activation
from .errors import InvalidCovariance, InvalidShape
from .matops import as_sym, min_eig

DEFAULT_ORDER = 64
RELU_ORDER = 128
# effective-order scaling: see pair_expectations
MAX_TENSOR_ORDER = 512
MAX_RANK1_ORDER = 1 << 18
RANK1_UNIT_VARIANCE = 100.0
# keeps unit-variance tanh converged to 1e-9 between orders 64 and 96
VARIANCE_FLOOR = 1.25
_RANK1_RTOL = 1e-12
_CHUNK_NODES = 1 << 21


@dataclass(frozen=True)
class CovPair:
    t11: float
    t12: float
    t22: float

    def __post_init__(self):
        _validate_triples(np.array([self.t11]), np.array([self.t12]), np.array([self.t22]))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray


class PDCheck(NamedTuple):
    pd: bool
    min_eig: float


@lru_cache(maxsize=None)
def gauss_hermite_rule(order):
    """Nodes/weights integrating against the standard normal density."""
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    nodes, weights = roots_hermitenorm(int(order))
    weights = weights / np.sqrt(2.0 * np.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(int(order), nodes, weights)


def default_order(act):
    return RELU_ORDER if get_activation(act).name == "relu" else DEFAULT_ORDER


def resolve_rule(act, rule):
    if rule is None:
        return gauss_hermite_rule(default_order(act))
    if isinstance(rule, (int, np.integer)):
        return gauss_hermite_rule(int(rule))
    return rule


def _pair_points(x, xp):
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise InvalidShape(f"dimension mismatch {x.shape} vs {xp.shape}")
    return x, xp


def k_tilde(x, xp):
    x, xp = _pair_points(x, xp)
    return float(x @ xp) / x.size


def cov_pair(x, xp):
    x, xp = _pair_points(x, xp)
    return CovPair(k_tilde(x, x), k_tilde(x, xp), k_tilde(xp, xp))


def _validate_triples(t11, t12, t22):
    slack = 1e-12 * np.maximum(1.0, np.abs(t11 * t22))
    bad = (t11 < -1e-12) | (t22 < -1e-12) | (t12 * t12 > t11 * t22 + slack)
    bad |= ~(np.isfinite(t11) & np.isfinite(t12) & np.isfinite(t22))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvalidCovariance(
            "not a valid 2x2 covariance",
            t11=float(t11[i]), t12=float(t12[i]), t22=float(t22[i]),
        )


def pair_expectations(g, t11, t12, t22, rule):
    """Vectorized ``E[g(u) g(v)]`` over arrays of covariance triples.

    ``rule.order`` is the per-axis order at unit variance. Full-rank pairs
    use a tensor rule with ``ceil(order * max(1.25, t11, t22))`` nodes per axis
    (capped at MAX_TENSOR_ORDER); rank-one pairs use a 1D rule with
    ``order**2 * ceil(max(1.25, t11, t22) / 100)`` nodes.
    """
    t11 = np.asarray(t11, dtype=float).ravel()
    t12 = np.asarray(t12, dtype=float).ravel()
    t22 = np.asarray(t22, dtype=float).ravel()
    _validate_triples(t11, t12, t22)
    t11 = np.maximum(t11, 0.0)
    t22 = np.maximum(t22, 0.0)

    a = np.sqrt(t11)
    pos = a > 0
    b = np.where(pos, t12 / np.where(pos, a, 1.0), 0.0)
    resid = np.where(pos, t22 - b * b, t22)
    rank1 = resid <= _RANK1_RTOL * t22
    c = np.sqrt(np.maximum(resid, 0.0))
    # rank one with t11 == 0: u == 0, v = sqrt(t22) z
    b = np.where(pos, b, np.sqrt(t22))

    # Gauss-Hermite needs ~order * variance nodes per axis to resolve a
    # unit-scale feature of g, so the effective order grows with the scale.
    t_max = np.maximum(np.maximum(t11, t22), VARIANCE_FLOOR)
    n_tensor = np.minimum(np.ceil(rule.order * t_max), MAX_TENSOR_ORDER).astype(int)
    n_line = np.minimum(
        rule.order**2 * np.ceil(t_max / RANK1_UNIT_VARIANCE), MAX_RANK1_ORDER
    ).astype(int)

    out = np.empty(t11.shape)
    for n in np.unique(n_line[rank1]):
        line = gauss_hermite_rule(int(n))
        idx = np.flatnonzero(rank1 & (n_line == n))
        z, w = line.nodes, line.weights
        for chunk in np.array_split(idx, idx.size * z.size // _CHUNK_NODES + 1):
            out[chunk] = (g(a[chunk, None] * z) * g(b[chunk, None] * z)) @ w
    for n in np.unique(n_tensor[~rank1]):
        axis = gauss_hermite_rule(int(n))
        idx = np.flatnonzero(~rank1 & (n_tensor == n))
        z1 = np.repeat(axis.nodes, n)
        z2 = np.tile(axis.nodes, n)
        w = np.outer(axis.weights, axis.weights).ravel()
        for chunk in np.array_split(idx, idx.size * w.size // _CHUNK_NODES + 1):
            u = a[chunk, None] * z1
            v = b[chunk, None] * z1 + c[chunk, None] * z2
            out[chunk] = (g(u) * g(v)) @ w
    return out


def pair_expectation(g, T, rule=None):
    """``E[g(u) g(v)]`` for ``(u, v) ~ N(0, T)``, ``T`` given as a CovPair."""
    rule = gauss_hermite_rule(DEFAULT_ORDER) if rule is None else resolve_rule(None, rule)
    return float(pair_expectations(g, [T.t11], [T.t12], [T.t22], rule)[0])


def nngp_K(x, xp, act, rule=None):
    act = get_activation(act)
    return pair_expectation(act.phi, cov_pair(x, xp), resolve_rule(act, rule))


def ntk_limit(x, xp, act, rule=None):
    act = get_activation(act)
    rule = resolve_rule(act, rule)
    T = cov_pair(x, xp)
    return pair_expectation(act.phi, T, rule) + T.t12 * pair_expectation(act.dphi, T, rule)


def as_point_rows(A, n0=None):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None] if n0 in (None, 1) else A[None, :]
    if A.ndim != 2 or (n0 is not None and A.shape[1] != n0):
        raise InvalidShape(f"expected an (m, n0) point array, got shape {A.shape}")
    return A


def kernel_blocks(A, B, act, rule=None, kinds=("nngp", "ntk")):
    """Kernel matrices between rows of ``A`` and rows of ``B``.

    Returns a dict keyed by the requested kinds (``"k_tilde"``, ``"nngp"``,
    ``"ntk"``). Each distinct covariance triple is integrated once; when
    ``B`` is None only the upper triangle of ``A x A`` is evaluated and the
    result is symmetric.
    """
    act = get_activation(act)
    rule = resolve_rule(act, rule)
    A = as_point_rows(A)
    sym = B is None
    B = A if sym else as_point_rows(B, A.shape[1])
    n0 = A.shape[1]
    na = np.einsum("ij,ij->i", A, A) / n0
    nb = np.einsum("ij,ij->i", B, B) / n0
    cross = A @ B.T / n0
    if sym:
        I, J = np.triu_indices(len(A))
    else:
        I, J = np.indices(cross.shape).reshape(2, -1)
    triples = np.stack([na[I], cross[I, J], nb[J]], axis=1)
    uniq, inverse = np.unique(triples, axis=0, return_inverse=True)
    inverse = inverse.ravel()

    vals = {}
    if "nngp" in kinds or "ntk" in kinds:
        vals["nngp"] = pair_expectations(act.phi, *uniq.T, rule)
    if "ntk" in kinds:
        vals["ntk"] = vals["nngp"] + uniq[:, 1] * pair_expectations(act.dphi, *uniq.T, rule)
    vals["k_tilde"] = uniq[:, 1]

    out = {}
    for kind in kinds:
        M = np.empty(cross.shape)
        M[I, J] = vals[kind][inverse]
        if sym:
            M[J, I] = M[I, J]
        out[kind] = M
    return out


def gram(points, kernel="ntk", act="tanh", rule=None, other=None):
    """Gram matrix of ``kernel`` in {"nngp", "ntk", "k_tilde"} (aliases:
    ``nngp_K``, ``ntk_limit``) on the rows of ``points``, or the cross matrix
    against ``other``."""
    kind = {"nngp_K": "nngp", "ntk_limit": "ntk"}.get(kernel, kernel)
    if kind not in ("nngp", "ntk", "k_tilde"):
        raise ValueError(f"unknown kernel {kernel!r}")
    M = kernel_blocks(points, other, act, rule, kinds=(kind,))[kind]
    return as_sym(M) if other is None else M


def check_pd(G, tol=1e-10):
    lam = min_eig(G)
    return PDCheck(lam > tol, lam)
