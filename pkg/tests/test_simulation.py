import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import trapezoid

from sigfss.scan import SiteGeometry, enumerate_windows
from sigfss.simulation import (
    PAPER_ALPHA_GRIDS,
    SimConfig,
    basis_matrix,
    basis_theta,
    default_geometry,
    delta_function,
    error_variance,
    evaluate_detection,
    generate_dataset,
    mean_function,
    run_study,
    sample_innovation,
    study_grid,
    time_grid,
)

SQ2 = math.sqrt(2)


def test_basis_theta():
    assert basis_theta(1, 0.37) == 1.0
    assert basis_theta(2, 0.25) == pytest.approx(SQ2)
    assert basis_theta(3, 0.0) == pytest.approx(SQ2)
    assert basis_theta(5, 0.5) == pytest.approx(SQ2 * math.cos(2 * math.pi))
    with pytest.raises(ValueError):
        basis_theta(0, 0.1)


def test_basis_near_orthonormal_on_grid():
    t = time_grid()
    b = basis_matrix(t, 10)
    gram = np.array([[trapezoid(b[:, i] * b[:, j], t) for j in range(10)] for i in range(10)])
    assert np.abs(gram - np.eye(10)).max() <= 0.02


def test_mean_function():
    np.testing.assert_allclose(mean_function(1, 0.0), [0.0])
    np.testing.assert_allclose(mean_function(2, 1.0), [0.0, 8.2], atol=1e-12)
    np.testing.assert_allclose(mean_function(2, 0.0), [0.0, 1.0])
    assert mean_function(2, time_grid()).shape == (101, 2)


def test_delta_function():
    np.testing.assert_allclose(delta_function("delta1", 1.0, 0.5, 2), [0.5, 0.5])
    np.testing.assert_allclose(delta_function("delta2", 4.0, 0.5), [1.0])
    np.testing.assert_allclose(delta_function("delta3", 2.0, 0.5), [2 / 3])
    np.testing.assert_allclose(delta_function("delta4", 0.5, 0.5), [0.5])
    np.testing.assert_allclose(delta_function(4, 0.5, 0.0), [0.5])
    with pytest.raises(ValueError):
        delta_function("delta5", 1.0, 0.5)


@pytest.mark.parametrize("kind, var_tol", [("gaussian", 0.02), ("student", 0.05), ("exponential", 0.05)])
def test_innovation_moments(kind, var_tol):
    z = sample_innovation(kind, 1, 0.0, np.random.default_rng(0), size=100_000)[:, 0]
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1) < var_tol


def test_exponential_marginal_shape():
    z = sample_innovation("exponential", 2, 0.5, np.random.default_rng(1), size=50_000)
    u = 2 * z + 2  # back to Exp(rate 1/2)
    assert stats.kstest(u[:, 1], "expon", args=(0, 2)).pvalue > 0.001
    assert z.min() >= -1.0


@pytest.mark.parametrize("kind", ["gaussian", "student", "exponential"])
def test_bivariate_innovation_correlation(kind):
    z = sample_innovation(kind, 2, 0.8, np.random.default_rng(2), size=100_000)
    corr = np.corrcoef(z.T)[0, 1]
    assert 0.6 < corr < 0.85
    if kind != "exponential":
        assert corr == pytest.approx(0.8, abs=0.02)


def test_error_variance_at_zero_matches_simulation():
    # closed form: theta_1(0)^2 = 1, even k vanish, odd k > 1 give 2
    k = np.arange(1, 101)
    closed = 1.5 * 0.2 + np.sum(np.where((k > 1) & (k % 2 == 1), 2.0, 0.0) * 1.5 * 0.2**k)
    assert error_variance(0.0)[0] == pytest.approx(closed, rel=1e-12)

    n = 10_000
    rng = np.random.default_rng(3)
    geometry = SiteGeometry(np.column_stack([np.arange(n), rng.uniform(size=n)]))
    data = generate_dataset(SimConfig(replicate_seed=4), geometry)
    values = np.array([s.values[0, 0] for s in data])
    assert values.var() == pytest.approx(closed, rel=0.05)


def test_dataset_shape_and_determinism():
    geometry, cluster = default_geometry(30, 4, seed=1)
    cfg = SimConfig(dim=2, cluster_sites=cluster, alpha=1.0, rho=0.5, replicate_seed=9)
    a = generate_dataset(cfg, geometry)
    b = generate_dataset(cfg, geometry)
    assert len(a) == 30 and a[0].values.shape == (101, 2)
    np.testing.assert_array_equal(a[0].times, np.linspace(0, 1, 101))
    assert a[0].times[0] == 0.0 and a[0].times[-1] == 1.0
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
        assert np.all(np.isfinite(x.values))


def test_cluster_shift_applied_only_inside():
    geometry, cluster = default_geometry(20, 3, seed=2)
    base = generate_dataset(SimConfig(cluster_sites=cluster, alpha=0.0, replicate_seed=1), geometry)
    shifted = generate_dataset(SimConfig(cluster_sites=cluster, alpha=1.0, replicate_seed=1), geometry)
    t = time_grid()
    for i in range(20):
        diff = shifted[i].values[:, 0] - base[i].values[:, 0]
        np.testing.assert_allclose(diff, t if i in cluster else 0.0, atol=1e-12)


def test_null_symmetry_between_cluster_and_rest():
    geometry, cluster = default_geometry(10, 3, seed=3)
    rest = [i for i in range(10) if i not in cluster]
    diffs = []
    for rep in range(1000):
        data = generate_dataset(SimConfig(cluster_sites=cluster, alpha=0.0, replicate_seed=rep), geometry)
        v = np.array([s.values[[25, 50, 75], 0] for s in data])
        diffs.append(v[list(cluster)].mean(axis=0) - v[rest].mean(axis=0))
    diffs = np.array(diffs)
    for j in range(3):
        assert stats.ttest_1samp(diffs[:, j], 0.0).pvalue > 0.001


def test_evaluate_detection():
    truth = set(range(8))
    r = evaluate_detection(truth, truth, 94)
    assert (r.tpr, r.fpr, r.ppv) == (1.0, 0.0, 1.0)
    r = evaluate_detection({50, 51, 52, 53}, truth, 94)
    assert (r.tpr, r.fpr, r.ppv) == (0.0, pytest.approx(4 / 86), 0.0)
    r = evaluate_detection(truth | {90}, truth, 94)
    assert (r.tpr, r.fpr, r.ppv) == (1.0, pytest.approx(1 / 86), pytest.approx(8 / 9))
    with pytest.raises(ValueError, match="empty true cluster"):
        evaluate_detection({1}, set(), 94)


def test_default_geometry_cluster_is_a_window():
    geometry, cluster = default_geometry()
    assert geometry.n == 94 and len(cluster) == 8
    assert cluster in {w.members for w in enumerate_windows(geometry)}


def test_study_grid():
    grid = study_grid(dims=(1,), deltas=("delta1", "delta3"), cluster_sites=(1, 2))
    assert [c.alpha for c in grid] == list(PAPER_ALPHA_GRIDS["delta1"] + PAPER_ALPHA_GRIDS["delta3"])
    grid2 = study_grid(dims=(2,), deltas=("delta2",), alphas=[0.0, 1.0], rhos=(0.2, 0.5), cluster_sites=(1,))
    assert len(grid2) == 4 and {c.rho for c in grid2} == {0.2, 0.5}


def test_run_study_small_and_deterministic():
    geometry, cluster = default_geometry(24, 4, seed=5)
    configs = [SimConfig(cluster_sites=cluster, alpha=3.0), SimConfig(cluster_sites=cluster, alpha=0.0)]
    kw = dict(replicates=3, permutations=19, seed=2, order_budget=200)
    a = run_study(configs, geometry, **kw)
    b = run_study(configs, geometry, **kw)
    assert [m.p_values for m in a] == [m.p_values for m in b]
    strong = a[0]
    assert strong.power == 1.0 and strong.replicates_rejecting == 3
    assert strong.tpr * len(cluster) + strong.fpr * (24 - len(cluster)) == pytest.approx(strong.mean_detected_size)
    for m in a:
        for v in (m.power, m.tpr, m.fpr, m.ppv):
            assert math.isnan(v) or 0 <= v <= 1
