"""Dense symmetric linear algebra.

Everything here goes through one eigendecomposition: ``expm_neg`` and
``i_t`` are both spectral maps of the same ``EigDecomp``, which keeps
``e^{-Bt}`` and ``I_t(B)`` exactly consistent with each other. Callers that
evaluate many times against one matrix can compute ``sym_eig`` once and
pass the result as ``eig=``.
"""

from typing import NamedTuple

import numpy as np

from .errors import InvalidMatrix, InvalidTime, NotPSD

# |a*t| below this uses the Taylor branch of I_t(a)
I_T_SWITCH = 1e-6
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)


class EigDecomp(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthogonal, columns

    def apply(self, fn):
        """Return ``U diag(fn(lambda)) U^T`` (symmetrized)."""
        U = self.eigenvectors
        M = (U * fn(self.eigenvalues)) @ U.T
        return 0.5 * (M + M.T)


class Cholesky(NamedTuple):
    L: np.ndarray
    jitter: float


def as_sym(B):
    """Validate a square finite matrix and return ``(B + B^T) / 2``."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 0:
        B = B.reshape(1, 1)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise InvalidMatrix("matrix has non-finite entries")
    return 0.5 * (B + B.T)


def check_time(t):
    t = float(t)
    if not t >= 0.0:
        raise InvalidTime(f"time must be >= 0, got {t}", t=t)
    return t


def sym_eig(B):
    B = as_sym(B)
    lam, U = np.linalg.eigh(B)
    return EigDecomp(lam, U)


def i_t_scalar(a, t):
    """``I_t(a) = int_0^t exp(-a s) ds``, elementwise in ``a``."""
    t = check_time(t)
    a = np.asarray(a, dtype=float)
    at = a * t
    small = np.abs(at) < I_T_SWITCH
    safe_a = np.where(small, 1.0, a)
    exact = -np.expm1(-at) / safe_a
    taylor = t - a * t**2 / 2.0 + a**2 * t**3 / 6.0
    return np.where(small, taylor, exact)


def expm_neg(B, t, eig=None):
    """``exp(-B t)`` for symmetric ``B``."""
    t = check_time(t)
    if t == 0.0:
        return np.eye(as_sym(B).shape[0])
    eig = sym_eig(B) if eig is None else eig
    return eig.apply(lambda lam: np.exp(-lam * t))


def i_t(B, t, eig=None):
    """The operator ``I_t(B)``: the spectral extension of ``(1 - e^{-Bt}) B^{-1}``.

    Well defined for any symmetric ``B``; zero eigenvalues map to ``t``.
    """
    t = check_time(t)
    eig = sym_eig(B) if eig is None else eig
    return eig.apply(lambda lam: i_t_scalar(lam, t))


def chol_jitter(B):
    """Cholesky factor of ``B + eps*1`` with the smallest eps on the jitter ladder.

    The ladder is ``JITTER_LADDER * trace(B) / dim``. Returns ``Cholesky(L, eps)``.
    """
    B = as_sym(B)
    dim = B.shape[0]
    if not np.any(B):
        return Cholesky(np.zeros_like(B), 0.0)
    scale = np.trace(B) / dim
    if scale <= 0.0:
        raise NotPSD("matrix has nonpositive trace", trace=float(np.trace(B)))
    eye = np.eye(dim)
    for rung in JITTER_LADDER:
        eps = rung * scale
        try:
            L = np.linalg.cholesky(B + eps * eye)
        except np.linalg.LinAlgError:
            continue
        return Cholesky(L, eps)
    raise NotPSD(
        "Cholesky failed at every jitter level",
        min_eig=float(min_eig(B)),
        max_jitter=JITTER_LADDER[-1] * scale,
    )


def min_eig(B):
    return float(sym_eig(B).eigenvalues[0])
