"""Shallow network ``f(x) = Phi(x theta0 / sqrt(n0)) theta1 / sqrt(n1)``.

Arrays follow the row convention: a batch of inputs is an ``(m, n0)`` array
with one point per row, inner weights are ``(n0, n1)``, outer weights
``(n1,)``. Gradients come from the closed forms, never from autodiff, which
makes ``empirical_ntk(A, B) == J(A) @ J(B).T`` an exact identity.

Ensembles of independent networks are trained in one vectorized loop
(``train_ensemble``); the per-network ``train_gd`` uses the same step
function with a batch of one.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .activations import get_activation
from .errors import DivergedTraining, InvalidShape
from .rng import stream


@dataclass(frozen=True, eq=False)
class NetworkParams:
    theta0: np.ndarray
    theta1: np.ndarray
    seed: Optional[int] = None
    replica: tuple = ()

    def __post_init__(self):
        theta0 = np.asarray(self.theta0, dtype=float)
        theta1 = np.asarray(self.theta1, dtype=float)
        if theta0.ndim != 2 or theta1.ndim != 1 or theta0.shape[1] != theta1.shape[0]:
            raise InvalidShape(
                f"inconsistent weight shapes {theta0.shape} and {theta1.shape}"
            )
        if theta0.size == 0 or theta1.size == 0:
            raise InvalidShape("empty weights")
        if not (np.all(np.isfinite(theta0)) and np.all(np.isfinite(theta1))):
            raise InvalidShape("weights must be finite")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "theta1", theta1)

    @property
    def n0(self):
        return self.theta0.shape[0]

    @property
    def n1(self):
        return self.theta0.shape[1]

    @property
    def size(self):
        """Total parameter count ``n0*n1 + n1``."""
        return self.n0 * self.n1 + self.n1

    def flat(self):
        return np.concatenate([self.theta0.ravel(), self.theta1])

    def with_flat(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.size,):
            raise InvalidShape(f"expected flat vector of length {self.size}, got {vec.shape}")
        cut = self.n0 * self.n1
        return NetworkParams(
            vec[:cut].reshape(self.n0, self.n1), vec[cut:], self.seed, self.replica
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
            raise InvalidShape(f"X of shape {X.shape} does not match y of shape {y.shape}")
        if len(np.unique(X, axis=0)) < len(X):
            warnings.warn(
                "duplicate training inputs: the limiting kernel Gram will be singular",
                stacklevel=2,
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def n0(self):
        return self.X.shape[1]


@dataclass
class Trajectory:
    steps: np.ndarray
    times: np.ndarray
    params: List[NetworkParams] = field(repr=False)
    train_outputs: np.ndarray = field(repr=False)
    losses: np.ndarray = field(repr=False)

    @property
    def final(self):
        return self.params[-1]


def _replica_key(replica):
    return tuple(replica) if isinstance(replica, (tuple, list)) else (replica,)


def init_params(n0, n1, seed, replica=0):
    """iid N(0, 1) weights from the stream keyed by ``(seed, replica, tensor)``."""
    n0, n1 = int(n0), int(n1)
    if n0 < 1 or n1 < 1:
        raise InvalidShape(f"n0 and n1 must be >= 1, got n0={n0}, n1={n1}")
    key = _replica_key(replica)
    theta0 = stream(seed, *key, "theta0").standard_normal((n0, n1))
    theta1 = stream(seed, *key, "theta1").standard_normal(n1)
    return NetworkParams(theta0, theta1, seed, key)


def as_points(x, n0):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = np.atleast_1d(x)[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != n0:
        raise InvalidShape(f"expected points of dimension {n0}, got array of shape {x.shape}")
    return X, single


def preactivations(p, x):
    """``h(x) = x theta0 / sqrt(n0)``; shape ``(n1,)`` or ``(m, n1)``."""
    X, single = as_points(x, p.n0)
    H = X @ p.theta0 / np.sqrt(p.n0)
    return H[0] if single else H


def forward(p, act, x):
    act = get_activation(act)
    X, single = as_points(x, p.n0)
    H = X @ p.theta0 / np.sqrt(p.n0)
    out = act.phi(H) @ p.theta1 / np.sqrt(p.n1)
    return float(out[0]) if single else out


def jacobian(p, act, x):
    """Gradient blocks ``(df/dtheta0, df/dtheta1)``.

    For a single point these have shapes ``(n0, n1)`` and ``(n1,)``; for a
    batch, a leading ``m`` axis is added.
    """
    act = get_activation(act)
    X, single = as_points(x, p.n0)
    H = X @ p.theta0 / np.sqrt(p.n0)
    g1 = act.phi(H) / np.sqrt(p.n1)
    g0 = X[:, :, None] * (act.dphi(H) * p.theta1)[:, None, :] / np.sqrt(p.n0 * p.n1)
    if single:
        return g0[0], g1[0]
    return g0, g1


def flat_jacobian(p, act, X):
    """``(m, N)`` Jacobian with columns ordered as ``NetworkParams.flat``."""
    g0, g1 = jacobian(p, act, np.atleast_2d(np.asarray(X, dtype=float)))
    return np.concatenate([g0.reshape(len(g1), -1), g1], axis=1)


def empirical_ntk(p, act, A, B=None):
    """Empirical NTK ``k(a, b; theta)`` on all pairs of rows of ``A`` and ``B``."""
    act = get_activation(act)
    A, _ = as_points(A, p.n0)
    same = B is None
    B = A if same else as_points(B, p.n0)[0]
    HA = A @ p.theta0 / np.sqrt(p.n0)
    HB = B @ p.theta0 / np.sqrt(p.n0)
    inner = (act.dphi(HA) * p.theta1**2) @ act.dphi(HB).T
    k = (A @ B.T / p.n0) * inner / p.n1 + act.phi(HA) @ act.phi(HB).T / p.n1
    return 0.5 * (k + k.T) if same else k


def hidden_ntk(x, xp):
    """Common diagonal value ``x . x' / n0`` of the hidden-layer kernel."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise InvalidShape(f"dimension mismatch {x.shape} vs {xp.shape}")
    return float(x @ xp) / x.size


def time_of(lr, steps):
    return lr * steps


# -- vectorized ensembles ------------------------------------------------------


def init_ensemble(n0, n1, seed, replicas, prefix=(), start=0):
    """Stack inits for replica indices ``start .. start + replicas - 1``.

    Replica ``r`` is keyed ``(seed, *prefix, r)``, so any chunking of an
    ensemble reproduces the same weights.
    """
    theta0 = np.empty((replicas, n0, n1))
    theta1 = np.empty((replicas, n1))
    for i in range(replicas):
        p = init_params(n0, n1, seed, (*prefix, start + i))
        theta0[i], theta1[i] = p.theta0, p.theta1
    return theta0, theta1


def ensemble_forward(theta0, theta1, act, X):
    """Outputs of ``R`` stacked networks on rows of ``X``; shape ``(R, m)``."""
    act = get_activation(act)
    n0, n1 = theta0.shape[1:]
    H = np.einsum("ia,rav->riv", X, theta0) / np.sqrt(n0)
    return np.einsum("riv,rv->ri", act.phi(H), theta1) / np.sqrt(n1)


def _residual_and_grads(theta0, theta1, act, X, y):
    n0, n1 = theta0.shape[1:]
    H = np.einsum("ia,rav->riv", X, theta0) / np.sqrt(n0)
    P = act.phi(H)
    f = np.einsum("riv,rv->ri", P, theta1) / np.sqrt(n1)
    r = f - y
    grad1 = np.einsum("ri,riv->rv", r, P) / np.sqrt(n1)
    grad0 = np.einsum("ia,riv->rav", X, r[:, :, None] * act.dphi(H))
    grad0 *= theta1[:, None, :] / np.sqrt(n0 * n1)
    return f, r, grad0, grad1


def _check_finite(r, step):
    with np.errstate(over="ignore", invalid="ignore"):
        loss = 0.5 * np.sum(r * r, axis=1)
    bad = ~np.isfinite(loss)
    if bad.any():
        raise DivergedTraining(
            f"loss became non-finite at step {step}",
            step=int(step),
            replica=int(np.flatnonzero(bad)[0]),
        )
    return loss


def train_ensemble(theta0, theta1, act, X, y, lr, steps, checkpoint_every=None, callback=None):
    """Full-batch gradient descent on ``R`` stacked networks at once.

    ``callback(step, theta0, theta1, outputs, losses)`` is invoked on every
    checkpoint (``step % checkpoint_every == 0`` and the final step), with
    the state *before* that step's update. Returns the final weights.
    """
    act = get_activation(act)
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    steps = int(steps)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    theta0 = np.array(theta0, dtype=float)
    theta1 = np.array(theta1, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    every = checkpoint_every or max(steps, 1)
    for step in range(steps + 1):
        f, r, grad0, grad1 = _residual_and_grads(theta0, theta1, act, X, y)
        losses = _check_finite(r, step)
        if callback is not None and (step % every == 0 or step == steps):
            callback(step, theta0, theta1, f, losses)
        if step == steps:
            break
        theta0 -= lr * grad0
        theta1 -= lr * grad1
    return theta0, theta1


def train_gd(p0, act, ds, lr, steps, checkpoint_every=None):
    """Explicit-Euler gradient descent on ``R = |f(X) - y|^2 / 2``.

    Checkpoint times are ``lr * step``; the final step is always recorded.
    """
    if ds.n0 != p0.n0:
        raise InvalidShape(f"dataset dimension {ds.n0} != network input dimension {p0.n0}")
    rec = {"steps": [], "params": [], "outputs": [], "losses": []}

    def keep(step, theta0, theta1, f, losses):
        rec["steps"].append(step)
        rec["params"].append(NetworkParams(theta0[0].copy(), theta1[0].copy(), p0.seed, p0.replica))
        rec["outputs"].append(f[0].copy())
        rec["losses"].append(float(losses[0]))

    train_ensemble(
        p0.theta0[None], p0.theta1[None], act, ds.X, ds.y, lr, steps, checkpoint_every, keep
    )
    steps_arr = np.array(rec["steps"])
    return Trajectory(
        steps=steps_arr,
        times=lr * steps_arr,
        params=rec["params"],
        train_outputs=np.array(rec["outputs"]),
        losses=np.array(rec["losses"]),
    )


def with_bias_inputs(X):
    """Append a constant-1 feature so the inner layer gains a bias."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])
