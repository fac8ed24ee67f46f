"""End-to-end experiments.

Every random quantity is drawn from a labelled counter-based stream:
the dataset from ``(seed, "dataset")``, replica ``r`` at width index ``w``
from ``(seed, w, r, tensor)``, Gaussian-process draws from
``(seed, "sweep", w, "gp")``. Replicas are trained in fixed-size chunks
on a bounded thread pool and merged in index order, so results do not
depend on the worker count or completion order.
"""

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .. import bounds, gp, kernels, ot
from ..activations import get_activation
from ..errors import KernelDegenerate, UndersampledError
from ..network import Dataset, ensemble_forward, init_ensemble, train_ensemble
from ..rng import stream
from . import output
from .config import SLOW_PRESETS
from .fitting import power_law_fit

log = logging.getLogger(__name__)

CHUNK = 256
BOOTSTRAP = 200


def gen_dataset(n, interval=(-10.0, 10.0), noise_sd=0.1, seed=0, n0=1):
    """Uniform inputs on ``interval`` with labels ``sin(x) + noise``.

    For ``n0 > 1`` the label is the sine of the coordinate mean.
    """
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    lo, hi = interval
    if not lo < hi:
        raise ValueError(f"empty interval {interval}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = stream(seed, "dataset")
    X = rng.uniform(lo, hi, size=(n, n0))
    eps = rng.standard_normal(n)
    y = np.sin(X.mean(axis=1)) + noise_sd * eps
    return Dataset(X, y)


def test_points(spec, seed=0, n0=1):
    if spec.spacing == "grid":
        grid = np.linspace(spec.lo, spec.hi, spec.count)
        return np.repeat(grid[:, None], n0, axis=1)
    return stream(seed, "test").uniform(spec.lo, spec.hi, size=(spec.count, n0))


def sweep_point(cfg):
    if cfg.test_x is not None:
        return np.full((1, cfg.n0), float(cfg.test_x))
    return stream(cfg.seed, "sweep-test").uniform(cfg.test.lo, cfg.test.hi, size=(1, cfg.n0))


def config_dataset(cfg):
    d = cfg.dataset
    return gen_dataset(d.n, (d.lo, d.hi), d.noise_sd, cfg.seed, cfg.n0)


def default_workers():
    return int(os.environ.get("NTKGAUSS_WORKERS", "1"))


def replicas_for(cfg, width):
    if cfg.replicas == "auto":
        return min(ot.min_samples_for_width(max(width, 2)), cfg.replicas_cap)
    return int(cfg.replicas)


def sampling_report(cfg, replicas=None):
    """Per-width undersampling flags; raises unless acknowledged."""
    flags = {}
    for w in cfg.widths:
        r = replicas_for(cfg, w) if replicas is None else replicas
        flags[w] = w >= 2 and r < ot.min_samples_for_width(w)
    if any(flags.values()) and not cfg.ack_undersampled:
        bad = [w for w, f in flags.items() if f]
        raise UndersampledError(
            f"replica counts fall below min_samples_for_width at widths {bad}; "
            "pass --ack-undersampled to run anyway",
            widths=bad,
        )
    return flags


@dataclass
class EnsembleOutputs:
    outputs: np.ndarray  # (replicas, points)
    trainings: int
    wall_time: float


def train_and_eval(cfg, width_index, width, ds, points, count, workers=None):
    """Train ``count`` replicas at one width; evaluate them on ``points``."""
    act = get_activation(cfg.activation)
    starts = list(range(0, count, CHUNK))

    def job(start):
        size = min(CHUNK, count - start)
        theta0, theta1 = init_ensemble(cfg.n0, width, cfg.seed, size, (width_index,), start)
        theta0, theta1 = train_ensemble(theta0, theta1, act, ds.X, ds.y, cfg.lr, cfg.steps)
        return ensemble_forward(theta0, theta1, act, points)

    t0 = time.perf_counter()
    workers = workers or cfg.workers or default_workers()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    outputs = np.concatenate(parts) if parts else np.zeros((0, len(points)))
    return EnsembleOutputs(outputs, sum(len(p) for p in parts), time.perf_counter() - t0)


def _limiting_gp(cfg, ds):
    return gp.LimitingGP(ds.X, ds.y, cfg.activation, cfg.quadrature_order)


def _prepare_out(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.preset in SLOW_PRESETS:
        log.warning("preset %s runs at full scale and can take hours", cfg.preset)
    return out


def _base_manifest(cfg, command):
    return {"command": command, "config": cfg.to_dict(), "config_hash": cfg.digest(), "seed": cfg.seed}


def _point_columns(n0):
    return ["x"] if n0 == 1 else [f"x{i}" for i in range(n0)]


# -- bands ----------------------------------------------------------------------


@dataclass
class BandsResult:
    points: np.ndarray
    moments: gp.GpMoments
    lo: np.ndarray
    hi: np.ndarray
    nets: np.ndarray
    t: float
    width: int
    coverage: Optional[float]
    undersampled: bool


def experiment_bands(cfg, write=True):
    """Replica networks against the mean and pointwise band of ``G_t``."""
    ds = config_dataset(cfg)
    limit = _limiting_gp(cfg, ds)
    limit.check_assumption()
    width = cfg.widths[0]
    count = 100 if cfg.replicas == "auto" else int(cfg.replicas)
    points = test_points(cfg.test, cfg.seed, cfg.n0)
    t0 = time.perf_counter()
    moments = limit.moments(points, cfg.t)
    lo, hi = gp.gp_band(moments, cfg.level)
    gp_time = time.perf_counter() - t0
    ens = train_and_eval(cfg, 0, width, ds, points, count)
    nets = ens.outputs
    coverage = float(np.mean((nets >= lo) & (nets <= hi))) if count else None
    undersampled = width >= 2 and count < ot.min_samples_for_width(width)
    res = BandsResult(points, moments, lo, hi, nets, cfg.t, width, coverage, undersampled)
    if write:
        out = _prepare_out(cfg)
        header = _point_columns(cfg.n0) + ["mu", "lo", "hi"] + [f"net_{i + 1}" for i in range(count)]
        rows = (
            list(points[i]) + [moments.mean[i], lo[i], hi[i]] + list(nets[:, i])
            for i in range(len(points))
        )
        output.write_csv(out / "bands.csv", header, rows)
        _bands_svg(res, out / "bands.svg", ds)
        output.write_manifest(out / "meta.json", {
            **_base_manifest(cfg, "bands"),
            "t": cfg.t, "width": width, "replicas": count, "trainings": ens.trainings,
            "coverage": coverage, "undersampled": undersampled, "level": cfg.level,
            "lam_min_kinf": limit.lam_min, "gp_provenance": limit.provenance,
            "wall_time": {"train": ens.wall_time, "gp": gp_time},
        })
    return res


def _bands_svg(res, path, ds):
    fig, ax = output.new_figure()
    x = res.points[:, 0]
    for net in res.nets:
        ax.plot(x, net, color="tab:blue", lw=0.4, alpha=0.3)
    ax.fill_between(x, res.lo, res.hi, color="grey", alpha=0.4, lw=0)
    ax.plot(x, res.moments.mean, color="black", lw=1.5)
    ax.scatter(ds.X[:, 0], ds.y, color="tab:red", zorder=3, s=12)
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title(f"width {res.width}, t = {res.t:.6g}")
    output.save_svg(
        fig, path,
        f"mean/band of G_t and {len(res.nets)} trained networks; coverage={res.coverage}",
    )


# -- width sweep ----------------------------------------------------------------


@dataclass
class SweepRow:
    width: int
    t: float
    w2_hat: float
    replicas: int
    boot_sd: float
    undersampled: bool
    wall_time: float = field(default=0.0, compare=False)
    fit_residual: Optional[float] = None


@dataclass
class SweepResult:
    rows: List[SweepRow]
    fit: Optional[object]
    point: np.ndarray
    moments: gp.GpMoments
    trainings: int


def _bootstrap_sd(nets, draws, seed, width_index):
    rng = stream(seed, "bootstrap", width_index)
    n = len(nets)
    vals = np.empty(BOOTSTRAP)
    for b in range(BOOTSTRAP):
        i = rng.integers(0, n, n)
        j = rng.integers(0, n, n)
        vals[b] = ot.w2_1d(nets[i], draws[j])
    return float(vals.std(ddof=1))


def experiment_sweep(cfg, write=True):
    """W2 between trained networks and ``G_t`` at one test point, per width."""
    flags = sampling_report(cfg)
    ds = config_dataset(cfg)
    limit = _limiting_gp(cfg, ds)
    point = sweep_point(cfg)
    moments = limit.moments(point, cfg.t)
    rows, trainings = [], 0
    for wi, width in enumerate(cfg.widths):
        count = replicas_for(cfg, width)
        ens = train_and_eval(cfg, wi, width, ds, point, count)
        trainings += ens.trainings
        nets = ens.outputs[:, 0]
        draws = gp.sample_gp(moments, count, cfg.seed, "sweep", wi)[:, 0]
        w2 = ot.w2_1d(nets, draws)
        rows.append(SweepRow(
            width, cfg.t, w2, count, _bootstrap_sd(nets, draws, cfg.seed, wi),
            flags[width], ens.wall_time,
        ))
        log.info("width %d: W2 = %.5g from %d replicas", width, w2, count)

    fit = None
    if len({r.width for r in rows}) >= 3 and all(r.w2_hat > 0 for r in rows):
        fit = power_law_fit([r.width for r in rows], [r.w2_hat for r in rows])
        for r in rows:
            r.fit_residual = math.log(r.w2_hat) - math.log(fit.predict(r.width))
    res = SweepResult(rows, fit, point, moments, trainings)
    if write:
        out = _prepare_out(cfg)
        header = ["width", "t", "w2_hat", "replicas", "boot_sd", "fit_residual", "undersampled"]
        output.write_csv(out / "sweep.csv", header, (
            [r.width, r.t, r.w2_hat, r.replicas, r.boot_sd,
             "" if r.fit_residual is None else r.fit_residual, r.undersampled]
            for r in rows
        ))
        _sweep_svg(res, out / "sweep.svg")
        output.write_manifest(out / "meta.json", {
            **_base_manifest(cfg, "sweep"),
            "t": cfg.t, "test_point": point.ravel(), "trainings": trainings,
            "gp_mean": float(moments.mean[0]), "gp_var": float(moments.cov[0, 0]),
            "fit": None if fit is None else fit._asdict(),
            "undersampled": {str(k): v for k, v in flags.items()},
            "wall_time": {str(r.width): r.wall_time for r in rows},
        })
    return res


def _sweep_svg(res, path):
    fig, ax = output.new_figure()
    w = np.array([r.width for r in res.rows], dtype=float)
    v = np.array([r.w2_hat for r in res.rows])
    ax.loglog(w, v, "o", color="tab:blue", label="empirical W2")
    note = "fit skipped"
    if res.fit is not None:
        grid = np.geomspace(w.min(), w.max(), 100)
        ax.loglog(grid, res.fit.predict(grid), color="tab:red",
                  label=f"fit: exponent {res.fit.exponent:.3f}")
        note = f"exponent={res.fit.exponent!r} prefactor={res.fit.prefactor!r} r2={res.fit.r2!r}"
    ax.set_xlabel("width n1")
    ax.set_ylabel("W2(f_t(x), G_t(x))")
    ax.legend()
    data = "; ".join(f"{r.width}:{r.w2_hat!r}" for r in res.rows)
    output.save_svg(fig, path, f"width:w2 {data}\n{note}")


# -- smaller commands -------------------------------------------------------------


def run_train(cfg, write=True):
    """Loss curves of ``replicas`` networks (1 when replicas is "auto") per width."""
    act = get_activation(cfg.activation)
    ds = config_dataset(cfg)
    count = 1 if cfg.replicas == "auto" else int(cfg.replicas)
    every = cfg.checkpoint_every or max(cfg.steps // 20, 1)
    rows = []
    for wi, width in enumerate(cfg.widths):
        theta0, theta1 = init_ensemble(cfg.n0, width, cfg.seed, count, (wi,))

        def keep(step, _t0, _t1, _f, losses, width=width):
            rows.extend([width, r, step, cfg.lr * step, losses[r]] for r in range(count))

        train_ensemble(theta0, theta1, act, ds.X, ds.y, cfg.lr, cfg.steps, every, keep)
    if write:
        out = _prepare_out(cfg)
        output.write_csv(out / "train.csv", ["width", "replica", "step", "t", "loss"], rows)
        output.write_manifest(out / "meta.json", {
            **_base_manifest(cfg, "train"), "t": cfg.t,
            "trainings": count * len(cfg.widths),
        })
    return rows


def run_gp_moments(cfg, write=True):
    ds = config_dataset(cfg)
    limit = _limiting_gp(cfg, ds)
    points = test_points(cfg.test, cfg.seed, cfg.n0)
    m = limit.moments(points, cfg.t)
    lo, hi = gp.gp_band(m, cfg.level)
    if write:
        out = _prepare_out(cfg)
        cols = _point_columns(cfg.n0)
        output.write_csv(out / "gp_moments.csv", cols + ["mu", "var", "lo", "hi"], (
            list(points[i]) + [m.mean[i], m.cov[i, i], lo[i], hi[i]] for i in range(len(points))
        ))
        output.write_csv(out / "gp_cov.csv", [f"c{j}" for j in range(len(points))], m.cov.tolist())
        output.write_manifest(out / "meta.json", {
            **_base_manifest(cfg, "gp-moments"), "t": cfg.t,
            "lam_min_kinf": limit.lam_min, "gp_provenance": limit.provenance,
        })
    return m


def check_assumptions(cfg, r=5.0):
    """Positive definiteness of ``k_inf(X, X)``, the activation audit and the
    width condition at every configured width."""
    ds = config_dataset(cfg)
    act = get_activation(cfg.activation)
    G = kernels.gram(ds.X, "ntk", act, cfg.quadrature_order)
    pd = kernels.check_pd(G, gp.PD_TOL)
    audit = bounds.activation_norms(act)
    report = {
        "activation": act.name,
        "lam_min_kinf": pd.min_eig,
        "kinf_positive_definite": pd.pd,
        "activation_audit": audit.note or "passed",
        "bounded_activation": audit.satisfied,
        "widths": {},
        "smallest_width": None,
    }
    if audit.satisfied and pd.pd:
        for w in cfg.widths:
            ti = bounds.theory_inputs(ds.X, ds.y, act, pd.min_eig, max(w, 2), r)
            lhs = bounds.assumption_r_lhs(ti)
            report["widths"][str(w)] = {"lhs": lhs, "holds": bool(lhs < pd.min_eig)}
        ti = bounds.theory_inputs(ds.X, ds.y, act, pd.min_eig, 2, r)
        report["smallest_width"] = bounds.smallest_width(ti)
    return report


def rate_envelope(cfg, a1=1.0, a2=1.0, r=5.0, write=True):
    """Rate envelope (up to the unknown constants) at each width."""
    ds = config_dataset(cfg)
    act = get_activation(cfg.activation)
    lam = kernels.check_pd(kernels.gram(ds.X, "ntk", act, cfg.quadrature_order)).min_eig
    if lam <= 0:
        raise KernelDegenerate("limiting kernel is not positive definite", min_eig=lam)
    rows = []
    for w in cfg.widths:
        ti = bounds.theory_inputs(ds.X, ds.y, act, lam, max(w, 2), r)
        rows.append([w, cfg.t, bounds.theorem_rate(ti, cfg.t, a1, a2)])
    if write:
        out = _prepare_out(cfg)
        output.write_csv(out / "envelope.csv", ["width", "t", "w2_squared_envelope"], rows)
        fig, ax = output.new_figure()
        ax.loglog([row[0] for row in rows], [row[2] for row in rows], "-o", color="tab:purple")
        ax.set_xlabel("width n1")
        ax.set_ylabel("W2^2 envelope")
        ax.set_title(f"rate envelope up to unknown constants (a1={a1}, a2={a2}, r={r})")
        output.save_svg(fig, out / "envelope.svg",
                        "up to unknown constants; " + "; ".join(f"{w}:{v!r}" for w, _, v in rows))
        output.write_manifest(out / "meta.json", {
            **_base_manifest(cfg, "rate-envelope"), "a1": a1, "a2": a2, "r": r,
            "lam_min_kinf": lam, "label": "up to unknown constants",
        })
    return rows
