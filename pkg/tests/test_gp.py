import math

import numpy as np
import pytest

from ntkgauss import gp, kernels, matops
from ntkgauss.errors import KernelDegenerate, NotPSD
from ntkgauss.network import Dataset
from oracles import normal_quantile


def dataset(seed=0, n=3):
    rng = np.random.default_rng(seed)
    X = np.sort(rng.uniform(-3, 3, (n, 1)), axis=0)
    return Dataset(X, np.sin(X[:, 0]))


TEST = np.linspace(-4, 4, 9)[:, None]


def test_t_zero_prior():
    ds = dataset()
    m = gp.gp_moments(TEST, ds, "tanh", t=0.0)
    assert np.all(m.mean == 0)
    np.testing.assert_array_equal(m.cov, kernels.gram(TEST, "nngp", "tanh"))


def test_t_zero_skips_pd_check():
    with pytest.warns(UserWarning):
        dup = Dataset(np.array([[1.0], [1.0]]), np.array([0.0, 1.0]))
    m = gp.gp_moments(TEST, dup, "tanh", t=0.0)
    assert np.all(m.mean == 0)
    with pytest.raises(KernelDegenerate) as err:
        gp.gp_moments(TEST, dup, "tanh", t=1.0)
    assert "min_eig" in err.value.fields


def test_long_time_kernel_regression():
    ds = dataset(1)
    lim = gp.LimitingGP(ds.X, ds.y, "sigmoid")
    t = 1e6 / lim.lam_min
    m = lim.moments(TEST, t)
    kx = kernels.gram(TEST, "ntk", "sigmoid", other=ds.X)
    ref = kx @ np.linalg.solve(lim.kinf_train, ds.y)
    np.testing.assert_allclose(m.mean, ref, atol=1e-6)


def test_scalar_hand_evaluation():
    x_train, y, x_test, t = 1.3, 0.7, -0.4, 2.5
    act = "erf"
    kinf = kernels.ntk_limit([x_train], [x_train], act)
    K = kernels.nngp_K([x_train], [x_train], act)
    Kx = kernels.nngp_K([x_test], [x_train], act)
    kx = kernels.ntk_limit([x_test], [x_train], act)
    Kxx = kernels.nngp_K([x_test], [x_test], act)
    It = -math.expm1(-kinf * t) / kinf
    mu = kx * It * y
    sigma = Kxx - 2 * Kx * It * kx + kx * It * K * It * kx
    m = gp.gp_moments(np.array([[x_test]]), Dataset(np.array([[x_train]]), np.array([y])), act, t=t)
    assert m.mean[0] == pytest.approx(mu, abs=1e-12)
    assert m.cov[0, 0] == pytest.approx(sigma, abs=1e-12)


def test_covariance_psd_many_times():
    rng = np.random.default_rng(2)
    for inst in range(50):
        n = int(rng.integers(1, 5))
        X = np.sort(rng.uniform(-4, 4, (n, 1)), axis=0) + 0.05 * np.arange(n)[:, None]
        lim = gp.LimitingGP(X, rng.standard_normal(n), ("tanh", "sigmoid", "erf")[inst % 3], 32)
        pts = rng.uniform(-5, 5, (6, 1))
        blocks = lim.test_blocks(pts)
        for t in (0, 0.1, 1, 10, 1e3):
            cov = lim.moments(pts, t, blocks).cov
            np.testing.assert_array_equal(cov, cov.T)
            assert np.linalg.eigvalsh(cov).min() >= -1e-8 * max(np.trace(cov), 1e-300)


def test_train_mean_converges_exponentially():
    ds = dataset(3)
    lim = gp.LimitingGP(ds.X, ds.y, "tanh")
    blocks = lim.test_blocks(ds.X)
    r0 = np.linalg.norm(ds.y)
    for t in (0.5, 5.0, 50.0, 500.0):
        mu = lim.moments(ds.X, t, blocks).mean
        assert np.linalg.norm(mu - ds.y) <= math.exp(-lim.lam_min * t) * r0 + 1e-9


def test_variance_contracts_at_training_points():
    for seed in range(5):
        ds = dataset(seed)
        lim = gp.LimitingGP(ds.X, ds.y, "sigmoid")
        blocks = lim.test_blocks(ds.X)
        v0 = np.diag(lim.moments(ds.X, 0.0, blocks).cov)
        for t in (0.1, 1.0, 10.0, 100.0, 1e4):
            assert np.all(np.diag(lim.moments(ds.X, t, blocks).cov) <= v0 + 1e-10)


def test_provenance_and_reuse():
    ds = dataset()
    a = gp.LimitingGP(ds.X, ds.y, "tanh")
    b = gp.LimitingGP(ds.X, ds.y, "tanh")
    assert a.provenance == b.provenance
    assert a.provenance != gp.LimitingGP(ds.X, ds.y, "erf").provenance
    np.testing.assert_array_equal(a.moments(TEST, 1.0).cov, a.moments(TEST, 1.0, a.test_blocks(TEST)).cov)


# -- sampling / bands --------------------------------------------------------------


def moments(mean, cov):
    mean = np.asarray(mean, float)
    return gp.GpMoments(mean, np.asarray(cov, float), 0.0, np.zeros((len(mean), 1)))


def test_sample_zero_cov():
    s = gp.sample_gp(moments([1.0, -2.0], np.zeros((2, 2))), 5, 0)
    np.testing.assert_array_equal(s, np.tile([1.0, -2.0], (5, 1)))


def test_sample_standard_normal():
    s = gp.sample_gp(moments([0.0], [[1.0]]), 10**6, 1)[:, 0]
    assert abs(s.mean()) < 3e-3
    assert abs(s.var() - 1) < 0.005


def test_sample_rank_one():
    s = gp.sample_gp(moments([0.0, 0.0], np.ones((2, 2))), 1000, 2)
    assert np.max(np.abs(s[:, 0] - s[:, 1])) <= 1e-4


def test_sample_moment_recovery():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 3))
    cov = A @ A.T
    mean = rng.standard_normal(3)
    n = 10**5
    s = gp.sample_gp(moments(mean, cov), n, 4)
    sd = np.sqrt(np.diag(cov))
    assert np.all(np.abs(s.mean(0) - mean) < 4 * sd / math.sqrt(n))
    emp = np.cov(s.T)
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / n)
    assert np.all(np.abs(emp - cov) < 4 * se)


def test_sample_deterministic():
    m = moments([0.0, 1.0], [[1.0, 0.5], [0.5, 2.0]])
    assert gp.sample_gp(m, 10, 5, "x").tobytes() == gp.sample_gp(m, 10, 5, "x").tobytes()
    assert gp.sample_gp(m, 10, 5, "x").tobytes() != gp.sample_gp(m, 10, 5, "y").tobytes()
    with pytest.raises(ValueError):
        gp.sample_gp(m, 0, 5)


def test_band_examples():
    lo, hi = gp.gp_band(moments([0.0], [[1.0]]), 0.95)
    z = normal_quantile(0.975)
    assert abs(z - 1.95996) < 1e-5
    assert lo[0] == pytest.approx(-z, abs=1e-8) and hi[0] == pytest.approx(z, abs=1e-8)
    lo, hi = gp.gp_band(moments([3.0], [[0.0]]))
    assert lo[0] == hi[0] == 3.0
    lo, hi = gp.gp_band(moments([2.0, -1.0], np.diag([4.0, 0.5])), 0.5)
    np.testing.assert_allclose((lo + hi) / 2, [2.0, -1.0])
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            gp.gp_band(moments([0.0], [[1.0]]), bad)


def test_band_clamps_tiny_negative_and_rejects_large():
    lo, hi = gp.gp_band(moments([0.0, 0.0], np.diag([1.0, -1e-14])))
    assert lo[1] == hi[1] == 0.0
    with pytest.raises(NotPSD):
        gp.gp_band(moments([0.0, 0.0], np.diag([1.0, -1e-3])))
