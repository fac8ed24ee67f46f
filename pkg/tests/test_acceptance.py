"""Acceptance criteria, each at its stated tolerance and time budget.

Every test appends one PASS/FAIL line to the terminal summary.
"""

import math
import time

import numpy as np
import pytest

import conftest
from ntkgauss import cli, gp, kernels, lindyn, matops, network, ot
from ntkgauss.activations import ACTIVATIONS, get_activation
from ntkgauss.harness import experiments
from ntkgauss.harness.config import build_config
from ntkgauss.harness.fitting import power_law_fit
from oracles import brute_w2, erf_nngp, fd_gradient, loglog_slope, mc_pair


def record(label, passed, detail, elapsed, budget):
    ok = bool(passed) and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail} [{elapsed:.1f}s / {budget:g}s]"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def psd_with_zero(rng, dim):
    # rank dim-1 Wishart: one exact zero eigenvalue
    A = rng.standard_normal((dim, max(dim - 1, 0))) * rng.uniform(0.2, 2.0)
    return A @ A.T


def test_c01_i_t_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        B = psd_with_zero(rng, int(rng.integers(1, 21)))
        eig = matops.sym_eig(B)
        for t in (0.0, 0.5, 10.0):
            gap = np.linalg.norm(matops.i_t(B, t, eig=eig) @ B - (np.eye(len(B)) - matops.expm_neg(B, t, eig=eig)))
            worst = max(worst, gap / (1e-9 * max(1.0, np.linalg.norm(B))))
    record("C1  I_t algebra (PSD, zero eigenvalue)", worst < 1,
           f"max gap / tolerance = {worst:.3g}", time.perf_counter() - t0, 5)


def test_c01b_i_t_algebra_indefinite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 21))
        B = psd_with_zero(rng, dim)
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        lam = np.linalg.eigvalsh(B) - rng.uniform(0, 2)
        lam[0] = 0.0
        B = (Q * lam) @ Q.T
        for t in (0.0, 0.5, 10.0):
            E = matops.expm_neg(B, t)
            gap = np.linalg.norm(matops.i_t(B, t) @ B - (np.eye(dim) - E))
            tol = 1e-9 * max(1.0, np.linalg.norm(B)) * max(1.0, np.linalg.norm(E))
            worst = max(worst, gap / tol)
    record("C1b I_t algebra (indefinite, tolerance scaled by |exp(-Bt)|)", worst < 1,
           f"max gap / tolerance = {worst:.3g}", time.perf_counter() - t0, 5)


def test_c02_jacobian():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_fd, worst_ntk = 0.0, 0.0
    for name in sorted(ACTIVATIONS):
        act = get_activation(name)
        for trial in range(20):
            n0, n1 = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            p = network.init_params(n0, n1, trial, replica=(name, "c2"))
            X = rng.standard_normal((3, n0))
            J = network.flat_jacobian(p, act, X)
            for x, row in zip(X, J):
                fd = fd_gradient(p.theta0, p.theta1, act.phi, x)
                worst_fd = max(worst_fd, np.linalg.norm(row - fd) / max(np.linalg.norm(fd), 1e-300))
            worst_ntk = max(worst_ntk, np.abs(network.empirical_ntk(p, act, X) - J @ J.T).max())
    record("C2  Jacobian vs finite differences; NTK = JJ^T", worst_fd < 1e-5 and worst_ntk < 1e-12,
           f"max rel err {worst_fd:.2e}, max |NTK - JJ^T| {worst_ntk:.1e}", time.perf_counter() - t0, 10)


def test_c03_kernel_limit():
    t0 = time.perf_counter()
    act = get_activation("sigmoid")
    pts = np.array([[1.0], [-0.5]])
    limit = kernels.gram(pts, "ntk", act)
    widths = [2**k for k in range(6, 14)]
    rms = []
    for w in widths:
        sq = []
        for seed in range(200):
            k0 = network.empirical_ntk(network.init_params(1, w, seed, ("c3", w)), act, pts)
            sq.append(np.mean((k0 - limit) ** 2))
        rms.append(math.sqrt(np.mean(sq)))
    fit = power_law_fit(widths, rms)
    slope, _ = loglog_slope(widths, rms)
    ok = -0.7 <= fit.exponent <= -0.3 and abs(slope - fit.exponent) < 1e-10
    record("C3  empirical-to-limit kernel decay", ok,
           f"exponent {fit.exponent:.4f} (r2 {fit.r2:.3f})", time.perf_counter() - t0, 180)


def test_c04_quadrature_vs_monte_carlo():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    triples = []
    while len(triples) < 10:
        t11, t22 = rng.uniform(0.05, 4.0, 2)
        rho = rng.uniform(-0.95, 0.95)
        triples.append((t11, rho * math.sqrt(t11 * t22), t22))
    worst_z, worst_erf = 0.0, 0.0
    for i, name in enumerate(("tanh", "sigmoid", "erf")):
        act = get_activation(name)
        for j, T in enumerate(triples):
            q = kernels.pair_expectation(act.phi, kernels.CovPair(*T))
            mc, se = mc_pair(act.phi, *T, 10**7, seed=1000 * i + j)
            worst_z = max(worst_z, abs(q - mc) / se)
            if name == "erf":
                worst_erf = max(worst_erf, abs(q - erf_nngp(*T)))
    record("C4  quadrature vs Monte Carlo (10^7); erf closed form", worst_z < 3 and worst_erf < 1e-8,
           f"max |q - MC| = {worst_z:.2f} SE, erf gap {worst_erf:.1e}", time.perf_counter() - t0, 120)


def test_c05_euler_convergence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    ratios = []
    for inst in range(20):
        n, n1 = int(rng.integers(1, 5)), int(rng.integers(4, 33))
        X = rng.uniform(-2, 2, (n, 1))
        s = lindyn.linearize(network.init_params(1, n1, inst, "c5"), "tanh", X, rng.uniform(-2, 2, (3, 1)))
        y = np.sin(X[:, 0])
        gaps = []
        for dt in (1e-2, 5e-3):
            flow = lindyn.lin_flow_ode(s, y, 1.0, dt, checkpoint_every=int(round(0.25 / dt)))
            g = max(
                max(np.abs(lindyn.lin_train_solution(s, y, t) - f).max(),
                    np.abs(lindyn.lin_test_solution(s, y, t) - g_).max())
                for t, f, g_ in zip(flow.times, flow.train_outputs, flow.test_outputs)
            )
            gaps.append(g)
        ratios.append(gaps[0] / gaps[1])
    ok = all(1.8 <= r <= 2.2 for r in ratios)
    record("C5  Euler flow converges linearly in dt", ok,
           f"gap ratio dt/(dt/2) in [{min(ratios):.3f}, {max(ratios):.3f}]", time.perf_counter() - t0, 60)


def test_c06_gp_moments():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    checks = []
    X = np.array([[-2.3], [0.4], [1.9]])
    y = np.sin(X[:, 0])
    test = np.linspace(-4, 4, 15)[:, None]
    lim = gp.LimitingGP(X, y, "sigmoid")
    blocks = lim.test_blocks(test)
    m0 = lim.moments(test, 0.0, blocks)
    checks.append(np.all(m0.mean == 0) and np.array_equal(m0.cov, blocks["K_test"]))
    mt = lim.moments(test, 1e6 / lim.lam_min, blocks)
    ref = blocks["kinf_cross"] @ np.linalg.solve(lim.kinf_train, y)
    krr_gap = np.abs(mt.mean - ref).max()
    checks.append(krr_gap < 1e-6)
    min_ratio = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        Xr = np.sort(rng.uniform(-4, 4, (n, 1)), axis=0) + 0.1 * np.arange(n)[:, None]
        lr = gp.LimitingGP(Xr, rng.standard_normal(n), "tanh")
        b = lr.test_blocks(test)
        for t in (0.0, 0.1, 1.0, 10.0, 1e3):
            cov = lr.moments(test, t, b).cov
            min_ratio = min(min_ratio, np.linalg.eigvalsh(cov).min() / np.trace(cov))
    checks.append(min_ratio >= -1e-8)
    xs, xt, yv, t = 0.8, -1.1, 0.3, 1.7
    kinf = kernels.ntk_limit([xs], [xs], "erf")
    It = -math.expm1(-kinf * t) / kinf
    kx, Kx = kernels.ntk_limit([xt], [xs], "erf"), kernels.nngp_K([xt], [xs], "erf")
    sigma = kernels.nngp_K([xt], [xt], "erf") - 2 * Kx * It * kx + kx * It * kernels.nngp_K([xs], [xs], "erf") * It * kx
    ms = gp.gp_moments(np.array([[xt]]), network.Dataset([[xs]], [yv]), "erf", t=t)
    scalar_gap = max(abs(ms.mean[0] - kx * It * yv), abs(ms.cov[0, 0] - sigma))
    checks.append(scalar_gap < 1e-12)
    record("C6  GP moments", all(checks),
           f"t=0 exact {checks[0]}, KRR gap {krr_gap:.1e}, min eig/trace {min_ratio:.1e}, "
           f"scalar gap {scalar_gap:.1e}", time.perf_counter() - t0, 30)


def test_c07_w2_estimators():
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    assign_gap = 0.0
    for _ in range(50):
        a, b = rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
        assign_gap = max(assign_gap, abs(ot.w2_assign(a, b) - brute_w2(a, b)))
    n = 10**6
    gauss_gap = abs(ot.w2_1d(rng.standard_normal(n), 2 + 2 * rng.standard_normal(n)) - ot.gaussian_w2(0, 1, 2, 2))
    Ns = [10**k for k in range(2, 7)]
    vals = []
    for N in Ns:
        reps = max(1, 10**5 // N)
        vals.append(np.mean([ot.w2_1d(rng.standard_normal(N), rng.standard_normal(N)) for _ in range(reps)]))
    exponent = power_law_fit(Ns, vals).exponent
    ok = assign_gap < 1e-12 and gauss_gap < 0.02 and -0.7 <= exponent <= -0.3
    record("C7  W2 estimators", ok,
           f"assignment gap {assign_gap:.1e}, Gaussian gap {gauss_gap:.4f}, self-distance exponent {exponent:.3f}",
           time.perf_counter() - t0, 120)


@pytest.fixture(scope="module")
def sweep_dirs(tmp_path_factory):
    return tmp_path_factory.mktemp("c8")


def sweep_config(seed, out):
    return build_config({
        "preset": "default", "seed": seed, "out": str(out), "activation": "sigmoid",
        "widths": [16, 32, 64, 128, 256], "replicas": "auto", "replicas_cap": 2000,
        "lr": 0.1, "steps": 10, "dataset": {"n": 1}, "ack_undersampled": True,
    })


def test_c08_sweep_exponent(sweep_dirs):
    t0 = time.perf_counter()
    exps = []
    for seed in range(5):
        res = experiments.experiment_sweep(sweep_config(seed, sweep_dirs / str(seed)))
        exps.append(res.fit.exponent)
    good = sum(e < 0 and -1.1 <= e <= -0.2 for e in exps)
    record("C8  width-sweep exponent, 5 master seeds", good >= 4,
           f"{good}/5 in [-1.1, -0.2]: " + ", ".join(f"{e:.3f}" for e in exps),
           time.perf_counter() - t0, 900)


def test_c09_band_coverage(tmp_path):
    t0 = time.perf_counter()
    cfg = build_config({"preset": "desk-bands", "seed": 0, "out": str(tmp_path)})
    assert (cfg.widths, cfg.replicas, cfg.dataset.n) == ([512], 100, 2)
    res = experiments.experiment_bands(cfg)
    record("C9  band coverage, width 512, 100 replicas", 0.90 <= res.coverage <= 0.99,
           f"coverage {res.coverage:.4f} at t = {res.t:.4f}", time.perf_counter() - t0, 600)


def test_c10_sample_size_anchor(capsys):
    t0 = time.perf_counter()
    w = ot.max_width_for_samples(10**4)
    assert cli.main(["min-samples", "--samples", "10000"]) == 0
    printed = str(w) in capsys.readouterr().out
    record("C10 sample-size anchor at N = 10^4", 600 <= w <= 700 and printed,
           f"max width {w}", time.perf_counter() - t0, 1)


def test_c11_determinism(tmp_path, sweep_dirs):
    t0 = time.perf_counter()
    same = []
    res = experiments.experiment_sweep(sweep_config(0, tmp_path / "again"))
    assert res.trainings > 0
    if (sweep_dirs / "0" / "sweep.csv").exists():
        same.append((sweep_dirs / "0" / "sweep.csv").read_bytes() == (tmp_path / "again" / "sweep.csv").read_bytes())
    small = {"widths": [8, 16, 32], "replicas": 300, "ack_undersampled": True, "steps": 20,
             "test": {"count": 25}, "dataset": {"n": 2}}
    runs = [
        (experiments.experiment_sweep, "sweep.csv", {}),
        (experiments.experiment_bands, "bands.csv", {"widths": [64], "replicas": 20}),
        (experiments.run_train, "train.csv", {"replicas": 3, "checkpoint_every": 5}),
        (experiments.run_gp_moments, "gp_cov.csv", {}),
    ]
    for fn, name, extra in runs:
        blobs = []
        for rep, workers in enumerate((1, 3)):
            out = tmp_path / f"{name}-{rep}"
            fn(build_config({**small, **extra, "seed": 7, "out": str(out), "workers": workers}))
            blobs.append((out / name).read_bytes())
        same.append(blobs[0] == blobs[1])
    record("C11 byte-identical CSVs on repeat", all(same) and len(same) == 5,
           f"{sum(same)}/{len(same)} outputs identical", time.perf_counter() - t0, 300)
