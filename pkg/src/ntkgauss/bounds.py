"""Computable hypotheses and rate templates.

``assumption_r_lhs`` is the left-hand side of the width condition

    4 |X| (sqrt5 |Phi|_inf + |y|) / sqrt(n1 n0)
        * (|Phi'|_inf + Lip Phi + |X| Lip Phi' sqrt(r log n1) / sqrt(n0)) < lam_min(k_inf)

and ``theorem_rate`` the W2^2 envelope
``r (a1 log n1 / (lam^3 n1 n0) + a2 n0 (1 + t^8) / (lam^r n1^(r/4)))``.
The constants a1, a2 are only known to exist, so every envelope produced
here is "up to unknown constants". Norms of matrices are Frobenius norms.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .activations import get_activation
from .errors import InvalidR, NormAuditFailed

AUDIT_GRID = np.linspace(-12.0, 12.0, 240001)
UNBOUNDED_NOTE = "boundedness hypothesis not satisfied: Phi or Phi' is unbounded"


@dataclass(frozen=True)
class TheoryInputs:
    norm_X: float
    norm_y: float
    sup_phi: float
    sup_dphi: float
    lip_phi: float
    lip_dphi: float
    lam_min_inf: float
    n0: int
    n1: int
    n: int
    r: float = 5.0

    def __post_init__(self):
        if self.r < 5:
            raise InvalidR(f"r must be >= 5, got {self.r}", r=self.r)
        norms = (self.norm_X, self.norm_y, self.sup_phi, self.sup_dphi, self.lip_phi, self.lip_dphi)
        if any(v is None or v < 0 for v in norms):
            raise ValueError("norm inputs must be nonnegative numbers")

    def with_width(self, n1):
        return replace(self, n1=int(n1))


def theory_inputs(X, y, act, lam_min_inf, n1, r=5.0):
    """Collect the inputs of the width condition from data and an activation."""
    act = get_activation(act)
    if not act.bounded:
        raise ValueError(f"{act.name} has no finite sup-norm constants")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    return TheoryInputs(
        norm_X=float(np.linalg.norm(X)),
        norm_y=float(np.linalg.norm(y)),
        sup_phi=act.sup_phi,
        sup_dphi=act.sup_dphi,
        lip_phi=act.lip_phi,
        lip_dphi=act.lip_dphi,
        lam_min_inf=float(lam_min_inf),
        n0=X.shape[1],
        n1=int(n1),
        n=X.shape[0],
        r=r,
    )


def assumption_r_lhs(ti):
    if ti.n1 < 2:
        raise ValueError(f"n1 must be >= 2, got {ti.n1}")
    if ti.r < 5:
        raise InvalidR(f"r must be >= 5, got {ti.r}", r=ti.r)
    prefactor = 4.0 * ti.norm_X * (math.sqrt(5.0) * ti.sup_phi + ti.norm_y) / math.sqrt(ti.n1 * ti.n0)
    bracket = (
        ti.sup_dphi
        + ti.lip_phi
        + ti.norm_X * ti.lip_dphi * math.sqrt(ti.r * math.log(ti.n1)) / math.sqrt(ti.n0)
    )
    return prefactor * bracket


def assumption_r_holds(ti):
    return assumption_r_lhs(ti) < ti.lam_min_inf


def smallest_width(ti, limit=2**62):
    """Smallest ``n1 >= 2`` satisfying the width condition, or None below ``limit``.

    The left-hand side is eventually decreasing in ``n1``; the search doubles
    until the condition holds and then bisects.
    """
    if ti.lam_min_inf <= 0:
        return None
    if assumption_r_holds(ti.with_width(2)):
        return 2
    hi = 4
    while not assumption_r_holds(ti.with_width(hi)):
        hi *= 2
        if hi > limit:
            return None
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if assumption_r_holds(ti.with_width(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def theorem_rate(ti, t, a1=1.0, a2=1.0):
    if a1 <= 0 or a2 <= 0:
        raise ValueError("a1 and a2 must be positive")
    lam = ti.lam_min_inf
    n0, n1, r = ti.n0, ti.n1, ti.r
    first = a1 * math.log(n1) / (lam**3 * n1 * n0)
    second = a2 * n0 / (lam**r * n1 ** (r / 4.0)) * (1.0 + t**8)
    return r * (first + second)


@dataclass(frozen=True)
class NormAudit:
    name: str
    sup_phi: float
    sup_dphi: float
    lip_phi: float
    lip_dphi: float
    satisfied: bool
    note: str = ""


def activation_norms(act, grid=AUDIT_GRID):
    """Check an activation's declared constants against a dense grid.

    Raises NormAuditFailed naming the first violated constant. Unbounded
    activations are reported as not satisfying the boundedness hypothesis.
    """
    act = get_activation(act)
    if not act.bounded:
        return NormAudit(act.name, None, None, None, None, False, UNBOUNDED_NOTE)
    z = np.asarray(grid, dtype=float)
    h = np.diff(z)
    phi, dphi = act.phi(z), act.dphi(z)
    observed = {
        "sup_phi": (np.max(np.abs(phi)), act.sup_phi, 1e-9),
        "sup_dphi": (np.max(np.abs(dphi)), act.sup_dphi, 1e-9),
        "lip_phi": (np.max(np.abs(np.diff(phi)) / h), act.lip_phi, 1e-6),
        "lip_dphi": (np.max(np.abs(np.diff(dphi)) / h), act.lip_dphi, 1e-6),
    }
    for name, (seen, declared, tol) in observed.items():
        if seen > declared + tol:
            raise NormAuditFailed(
                f"{act.name}: observed {name} {seen:.10g} exceeds declared {declared:.10g}",
                constant=name, observed=float(seen), declared=float(declared),
            )
    return NormAudit(act.name, act.sup_phi, act.sup_dphi, act.lip_phi, act.lip_dphi, True)
