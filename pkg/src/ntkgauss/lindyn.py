"""Linearized network and its gradient-flow dynamics.

The linearization around ``theta0`` has a constant tangent kernel ``k0``,
so the flow is solvable in closed form:

    f_lin(X, t) = e^{-k0 t} f0(X) + (1 - e^{-k0 t}) y
    f_lin(x, t) = f0(x) - k0(x, X) I_t(k0) (f0(X) - y)

The residual in the test-point formula is the *training* residual
``f0(X) - y``, an n-vector. ``lin_flow_ode`` integrates the flow with
explicit Euler and exists as an independent check of the closed forms.
"""

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .activations import ActivationSpec, get_activation
from .errors import DivergedFlow, InvalidShape
from .network import NetworkParams, as_points, empirical_ntk, flat_jacobian, forward


@dataclass(frozen=True, eq=False)
class LinearizedState:
    base: NetworkParams
    act: ActivationSpec
    X_train: np.ndarray
    X_test: np.ndarray
    f0_train: np.ndarray
    f0_test: np.ndarray
    k0_train: np.ndarray
    k0_cross: np.ndarray
    eig: matops.EigDecomp = field(repr=False)

    @property
    def seed(self):
        return self.base.seed


@dataclass
class LinearFlow:
    times: np.ndarray
    omega: np.ndarray  # (checkpoints, N) parameter displacement
    train_outputs: np.ndarray
    test_outputs: np.ndarray


def _rows(X, n0):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if n0 == 1 else X[None, :]
    if X.shape[1] != n0:
        raise InvalidShape(f"expected points of dimension {n0}, got shape {X.shape}")
    return X


def linearize(p, act, X_train, X_test=None):
    """Freeze ``f0`` and the ``k0`` blocks at ``p`` for the given point sets."""
    act = get_activation(act)
    X_train = _rows(X_train, p.n0)
    X_test = X_train[:0] if X_test is None else _rows(X_test, p.n0)
    k0_train = matops.as_sym(empirical_ntk(p, act, X_train))
    return LinearizedState(
        base=p,
        act=act,
        X_train=X_train,
        X_test=X_test,
        f0_train=np.atleast_1d(forward(p, act, X_train)),
        f0_test=np.atleast_1d(forward(p, act, X_test)) if len(X_test) else np.zeros(0),
        k0_train=k0_train,
        k0_cross=empirical_ntk(p, act, X_test, X_train) if len(X_test) else np.zeros((0, len(X_train))),
        eig=matops.sym_eig(k0_train),
    )


def lin_forward(state, p_new, x):
    """First-order Taylor value ``f(x; theta0) + grad f(x; theta0) . omega``."""
    base = state.base
    if p_new.theta0.shape != base.theta0.shape or p_new.theta1.shape != base.theta1.shape:
        raise InvalidShape("p_new must have the same shapes as the base parameters")
    omega = p_new.flat() - base.flat()
    X, single = as_points(x, base.n0)
    out = forward(base, state.act, X) + flat_jacobian(base, state.act, X) @ omega
    return float(out[0]) if single else out


def lin_train_solution(state, y, t):
    y = np.asarray(y, dtype=float)
    decay = matops.expm_neg(state.k0_train, t, eig=state.eig)
    return decay @ state.f0_train + y - decay @ y


def lin_test_solution(state, y, t):
    y = np.asarray(y, dtype=float)
    It = matops.i_t(state.k0_train, t, eig=state.eig)
    return state.f0_test - state.k0_cross @ (It @ (state.f0_train - y))


def lin_flow_ode(state, y, t_end, dt, checkpoint_every=None):
    """Explicit-Euler integration of the linearized flow in ``omega``.

    Runs ``round(t_end / dt)`` steps; checkpoints every ``checkpoint_every``
    steps and at the end.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    matops.check_time(t_end)
    y = np.asarray(y, dtype=float)
    J_train = flat_jacobian(state.base, state.act, state.X_train)
    J_test = flat_jacobian(state.base, state.act, state.X_test) if len(state.X_test) else None
    steps = int(round(t_end / dt))
    every = checkpoint_every or max(steps, 1)
    omega = np.zeros(state.base.size)
    rec_t, rec_w, rec_tr, rec_te = [], [], [], []
    for step in range(steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            f_train = state.f0_train + J_train @ omega
        if not np.all(np.isfinite(f_train)):
            raise DivergedFlow(f"linearized flow diverged at step {step}", step=step)
        if step % every == 0 or step == steps:
            rec_t.append(step * dt)
            rec_w.append(omega.copy())
            rec_tr.append(f_train)
            rec_te.append(state.f0_test + J_test @ omega if J_test is not None else np.zeros(0))
        if step == steps:
            break
        omega -= dt * (J_train.T @ (f_train - y))
    return LinearFlow(np.array(rec_t), np.array(rec_w), np.array(rec_tr), np.array(rec_te))

