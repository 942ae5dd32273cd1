import numpy as np
import pytest
from scipy import stats

from sigfss.inference import (
    PermutationPlan,
    draw_permutation,
    null_statistics,
    null_statistics_refit,
    permutation_pvalue,
    pvalues_against_null,
    run_inference,
)
from sigfss.ranks import fit_transform_matrix
from sigfss.scan import SiteGeometry, enumerate_windows, membership_matrix


@pytest.fixture(scope="module")
def small_problem():
    rng = np.random.default_rng(0)
    geometry = SiteGeometry(rng.uniform(size=(30, 2)))
    return geometry, rng.normal(size=(30, 3))


def test_pvalue_formula():
    assert permutation_pvalue(5.0, np.zeros(999)) == pytest.approx(0.001)
    assert permutation_pvalue(5.0, np.full(999, 6.0)) == 1.0
    null = np.r_[np.full(9, 10.0), np.zeros(190)]
    assert permutation_pvalue(5.0, null) == pytest.approx(0.05)


def test_ties_count_against_observed():
    assert permutation_pvalue(2.0, [2.0, 1.0, 3.0]) == 0.75


def test_observed_inserted_at_top():
    null = np.random.default_rng(1).uniform(size=99)
    assert permutation_pvalue(null.max() + 1e-9, null) == 1 / 100


def test_vectorised_pvalues_match_scalar():
    rng = np.random.default_rng(2)
    null = rng.normal(size=199)
    null[:5] = 0.5
    obs = np.r_[rng.normal(size=50), 0.5, null.max(), null.min()]
    expected = [permutation_pvalue(o, null) for o in obs]
    np.testing.assert_array_equal(pvalues_against_null(obs, null), expected)


def test_plan_validation():
    with pytest.raises(ValueError):
        PermutationPlan(0)
    with pytest.raises(ValueError):
        PermutationPlan(99, alpha_level=1.5)
    with pytest.warns(UserWarning, match="cannot reach"):
        PermutationPlan(10, alpha_level=0.05)


def test_permutation_streams_are_reproducible():
    a = draw_permutation(7, 3, 50)
    np.testing.assert_array_equal(a, draw_permutation(7, 3, 50))
    assert not np.array_equal(a, draw_permutation(7, 4, 50))
    assert not np.array_equal(a, draw_permutation(8, 3, 50))
    assert sorted(a) == list(range(50))


def test_permutations_uniform_on_small_group():
    counts = {}
    for b in range(6000):
        key = tuple(draw_permutation(11, b, 3))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def test_shortcut_equals_refit(small_problem):
    geometry, z = small_problem
    plan = PermutationPlan(30, seed=5)
    mem = membership_matrix(enumerate_windows(geometry), geometry.n)
    ranks = fit_transform_matrix(z, tol=1e-12, max_iter=500).ranks
    fast = null_statistics(ranks, mem, plan)
    slow = null_statistics_refit(z, mem, plan, tol=1e-12, max_iter=500)
    np.testing.assert_allclose(fast, slow, rtol=1e-7)


def test_null_depends_only_on_assignment(small_problem):
    geometry, z = small_problem
    plan = PermutationPlan(20, seed=9)
    mem = membership_matrix(enumerate_windows(geometry), geometry.n)
    ranks = fit_transform_matrix(z).ranks
    # reordering windows in memory changes nothing beyond BLAS rounding
    np.testing.assert_allclose(null_statistics(ranks, mem, plan), null_statistics(ranks, mem[::-1], plan), rtol=1e-12)


def test_run_inference_outputs(small_problem):
    geometry, z = small_problem
    z = z.copy()
    near = np.argsort(((geometry.coordinates - geometry.coordinates[0]) ** 2).sum(axis=1))[:5]
    z[near] += 4.0
    plan = PermutationPlan(99, seed=1)
    res, rs = run_inference(z, geometry, plan)
    assert res.p_values[0] == pytest.approx(0.01)
    assert len(set(res.windows[0].members) & set(near.tolist())) >= 3
    grid = np.arange(1, 101) / 100
    assert np.all(np.isin(np.round(res.p_values * 100), np.round(grid * 100)))
    assert np.all(np.diff(res.p_values) >= 0)
    used = set()
    for pos in res.clusters:
        assert res.p_values[pos] <= plan.alpha_level
        assert used.isdisjoint(res.windows[pos].members)
        used.update(res.windows[pos].members)
    assert res.clusters[0] == 0


def test_run_inference_deterministic(small_problem):
    geometry, z = small_problem
    a, _ = run_inference(z, geometry, PermutationPlan(49, seed=3))
    b, _ = run_inference(z, geometry, PermutationPlan(49, seed=3))
    np.testing.assert_array_equal(a.p_values, b.p_values)
    np.testing.assert_array_equal(a.null_statistics, b.null_statistics)


def test_row_count_mismatch(small_problem):
    geometry, z = small_problem
    with pytest.raises(ValueError, match="score rows"):
        run_inference(z[:10], geometry, PermutationPlan(19))


def test_type_one_error_on_iid_scores():
    """Rejection rate on structureless scores lies in the binomial 95% band."""
    rng = np.random.default_rng(12)
    geometry = SiteGeometry(rng.uniform(size=(40, 2)))
    windows = enumerate_windows(geometry)
    rejections = 0
    for rep in range(100):
        z = rng.normal(size=(40, 2))
        res, _ = run_inference(z, geometry, PermutationPlan(99, seed=rep), windows=windows)
        rejections += res.p_values[0] <= 0.05
    assert 0.018 <= rejections / 100 <= 0.104
