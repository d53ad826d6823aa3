import numpy as np
import pytest

from invexreg.datagen import (GenSpec, ResampleExhausted, gen_clean,
                              gen_outliers, gen_theta_star, generate, rho_gap)
from invexreg.model import CLEAN, OUTLIER, Dataset, GroundTruthConfig


def make_spec(p=10, k=3, r=40, n_out=20, seed=0, sigma_e=0.1, M=None, **kw):
    gt = GroundTruthConfig(p=p, k=k, M=(1.1 * k if M is None else M), sigma_e=sigma_e)
    return GenSpec(ground_truth=gt, r=r, n_outliers=n_out, seed=seed, **kw)


def test_theta_star_sparsity_and_magnitudes():
    spec = make_spec(p=50, k=4, seed=1)
    theta = gen_theta_star(spec)
    nz = np.abs(theta) > 0
    assert nz.sum() == 4
    mags = np.abs(theta[nz])
    assert np.all((mags >= 0.1) & (mags <= 1.1))


def test_theta_star_dense_at_k_equals_p():
    spec = make_spec(p=5, k=5, M=5.5)
    theta = gen_theta_star(spec)
    assert np.all(np.abs(theta) > 0)


def test_theta_star_deterministic():
    spec = make_spec(seed=42)
    assert np.array_equal(gen_theta_star(spec), gen_theta_star(spec))


def test_theta_star_rescaled_to_budget():
    spec = make_spec(p=10, k=4, M=0.2)
    theta = gen_theta_star(spec)
    assert abs(np.abs(theta).sum() - 0.2) <= 1e-12


def test_clean_noiseless():
    spec = make_spec(sigma_e=0.0)
    theta = gen_theta_star(spec)
    X, y = gen_clean(spec, theta)
    assert np.array_equal(y, X @ theta)


def test_clean_sample_covariance_close_to_identity():
    spec = make_spec(p=5, k=2, r=10000, n_out=0, seed=3)
    X, _ = gen_clean(spec, gen_theta_star(spec))
    cov = X.T @ X / X.shape[0]
    assert np.linalg.norm(cov - np.eye(5), 2) < 0.1


def test_clean_with_general_covariance():
    Sigma = np.array([[1.0, 0.4], [0.4, 1.0]])
    gt = GroundTruthConfig(p=2, k=1, M=1.1, sigma_e=0.0, Sigma=Sigma)
    spec = GenSpec(ground_truth=gt, r=40000, n_outliers=0, seed=4)
    X, _ = gen_clean(spec, gen_theta_star(spec))
    cov = X.T @ X / X.shape[0]
    assert np.abs(cov - Sigma).max() < 0.05


def test_clean_noise_scale():
    spec = make_spec(r=800, sigma_e=0.3)
    theta = gen_theta_star(spec)
    X, y = gen_clean(spec, theta)
    emp = np.std(y - X @ theta)
    assert abs(emp - 0.3) <= 0.2 * 0.3


def test_outliers_degenerate_ranges():
    spec = make_spec(outlier_predictor_range=(0.0, 0.0),
                     outlier_response_range=(5.0, 5.0))
    X, y = gen_outliers(spec)
    assert np.all(X == 0.0) and np.all(y == 5.0)


def test_outliers_default_ranges():
    spec = make_spec(seed=9)
    X, y = gen_outliers(spec)
    assert X.min() >= 0.0 and X.max() <= 1.0
    assert y.min() >= 0.0 and y.max() <= 5.0


def test_outliers_empty():
    spec = make_spec(n_out=0)
    X, y = gen_outliers(spec)
    assert X.shape == (0, 10) and y.shape == (0,)


def test_rho_gap_hand_example():
    # clean sample with loss 0, outlier with loss 5 at theta* = (1,)
    data = Dataset(X=np.array([[1.0], [1.0]]), y=np.array([1.0, 1.0 + np.sqrt(5.0)]),
                   labels=np.array([CLEAN, OUTLIER]), r=1)
    gap = rho_gap(data, np.array([1.0]))
    assert abs(gap - 5.0) <= 1e-12


def test_rho_gap_detects_duplicated_clean():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((3, 2))
    theta = np.array([1.0, -0.5])
    y = X @ theta + np.array([0.1, -0.05, 0.1])
    X2 = np.vstack([X, X[0]])
    y2 = np.append(y, y[0])  # outlier identical to a clean sample
    data = Dataset(X=X2, y=y2, labels=np.array([CLEAN] * 3 + [OUTLIER]), r=3)
    assert rho_gap(data, theta) <= 0.0


def test_rho_gap_single_class_convention():
    data = Dataset(X=np.ones((2, 1)), y=np.ones(2),
                   labels=np.array([CLEAN, CLEAN]), r=2)
    assert np.isinf(rho_gap(data, np.array([0.5])))


def test_generate_no_outliers():
    data = generate(make_spec(n_out=0))
    assert np.all(data.labels == CLEAN)
    assert np.isinf(data.rho)


def test_generate_deterministic():
    spec = make_spec(seed=21)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.labels, b.labels)
    assert a.rho == b.rho


def test_generate_margin_holds():
    for seed in range(5):
        data = generate(make_spec(seed=seed))
        assert data.rho > 0.0
        assert rho_gap(data, data.theta_star) == data.rho


def test_generate_rho_min_enforced():
    data = generate(make_spec(seed=2, rho_min=3.0, max_resamples=500))
    assert data.rho >= 3.0


def test_generate_counts_and_theta_consistency():
    spec = make_spec(r=30, n_out=12, seed=5)
    data = generate(spec)
    assert data.n == 42 and data.r == 30
    assert int((data.labels == OUTLIER).sum()) == 12
    assert np.array_equal(data.theta_star, gen_theta_star(spec))


def test_generate_resample_exhausted():
    # clean losses are huge (big noise), outliers capped in [0,0.1]x[0,0.1]
    spec = make_spec(sigma_e=50.0, seed=7, max_resamples=3,
                     outlier_predictor_range=(0.0, 0.1),
                     outlier_response_range=(0.0, 0.1))
    with pytest.raises(ResampleExhausted):
        generate(spec)


def test_genspec_validation():
    with pytest.raises(ValueError):
        make_spec(r=0)
    with pytest.raises(ValueError):
        make_spec(outlier_response_range=(1.0, 0.0))
