"""The time-indexed Gaussian process ``G_t``.

``G_t`` is the infinite-width law of the trained network at time ``t``:

    mu_t(x)        = k_inf(x, X) I_t(k_inf) y
    Sigma_t(x, x') = K(x, x') - K(x, X) I_t k_inf(X, x') - k_inf(x, X) I_t K(X, x')
                     + k_inf(x, X) I_t K(X, X) I_t k_inf(X, x')

with ``I_t = I_t(k_inf(X, X))``. ``LimitingGP`` holds the training-set
Gram blocks and one eigendecomposition of ``k_inf(X, X)``, so sweeping many
times or test sets costs no further factorizations.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import kernels, matops
from .activations import get_activation
from .errors import KernelDegenerate, NotPSD
from .rng import stream

PD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GpMoments:
    mean: np.ndarray
    cov: np.ndarray
    time: float
    test_points: np.ndarray
    provenance: str = ""

    @property
    def var(self):
        return np.diag(self.cov).copy()


class LimitingGP:
    """Kernel blocks of ``G_t`` on a fixed training set."""

    def __init__(self, X, y, act, rule=None, pd_tol=PD_TOL):
        self.act = get_activation(act)
        self.rule = kernels.resolve_rule(self.act, rule)
        self.X = kernels.as_point_rows(X)
        self.y = np.asarray(y, dtype=float).ravel()
        if len(self.y) != len(self.X):
            raise ValueError(f"{len(self.X)} inputs but {len(self.y)} labels")
        self.pd_tol = pd_tol
        blocks = kernels.kernel_blocks(self.X, None, self.act, self.rule)
        self.K_train = matops.as_sym(blocks["nngp"])
        self.kinf_train = matops.as_sym(blocks["ntk"])
        self.eig = matops.sym_eig(self.kinf_train)
        h = hashlib.sha256()
        h.update(f"{self.act.name}|{self.rule.order}|".encode())
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        self.provenance = h.hexdigest()[:16]

    @property
    def lam_min(self):
        return float(self.eig.eigenvalues[0])

    def check_assumption(self):
        """Raise KernelDegenerate unless ``k_inf(X, X)`` is positive definite."""
        if not self.lam_min > self.pd_tol:
            raise KernelDegenerate(
                f"limiting kernel on the training set is not positive definite "
                f"(min eigenvalue {self.lam_min:.3e} <= {self.pd_tol:g})",
                min_eig=self.lam_min,
            )

    def test_blocks(self, test):
        test = kernels.as_point_rows(test, self.X.shape[1])
        cross = kernels.kernel_blocks(test, self.X, self.act, self.rule)
        K_test = kernels.kernel_blocks(test, None, self.act, self.rule, kinds=("nngp",))["nngp"]
        return {"test": test, "K_test": K_test, "K_cross": cross["nngp"], "kinf_cross": cross["ntk"]}

    def moments(self, test, t, blocks=None):
        t = matops.check_time(t)
        if t > 0:
            self.check_assumption()
        b = self.test_blocks(test) if blocks is None else blocks
        It = matops.i_t(self.kinf_train, t, eig=self.eig)
        A = b["kinf_cross"] @ It
        B = b["K_cross"] @ It
        mean = A @ self.y
        cov = b["K_test"] - B @ b["kinf_cross"].T - A @ b["K_cross"].T + A @ self.K_train @ A.T
        cov = 0.5 * (cov + cov.T)
        return GpMoments(mean, cov, t, b["test"], self.provenance)


def gp_moments(test, ds, act, rule=None, t=0.0):
    """Moments of ``G_t`` on the rows of ``test`` for dataset ``ds``."""
    return LimitingGP(ds.X, ds.y, act, rule).moments(test, t)


def _clamped_cov(cov):
    cov = np.array(cov, dtype=float)
    d = np.diag(cov)
    floor = -(1e-10 * max(np.trace(cov), 0.0) + 1e-14)
    if np.any(d < floor):
        i = int(np.argmin(d))
        raise NotPSD(f"covariance diagonal entry {i} is {d[i]:.3e}", index=i, value=float(d[i]))
    neg = d < 0
    cov[neg, :] = 0.0
    cov[:, neg] = 0.0
    return cov


def gp_band(m, level=0.95):
    """Pointwise ``mean +/- z * sd`` band at the given two-sided level."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = ndtri(0.5 * (1.0 + level))
    sd = np.sqrt(np.diag(_clamped_cov(m.cov)))
    return m.mean - z * sd, m.mean + z * sd


def sample_gp(m, count, seed, *labels):
    """``count`` draws of ``G_t`` on the test points; shape ``(count, m)``."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    L = matops.chol_jitter(_clamped_cov(m.cov)).L
    z = stream(seed, *labels, "gp").standard_normal((count, len(m.mean)))
    return m.mean + z @ L.T
