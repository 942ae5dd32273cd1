"""Random-labelling permutation inference for the scan statistic."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .pca import ScoreMatrix
from .ranks import DEFAULT_MAX_ITER, DEFAULT_TOL, fit_transform_matrix
from .scan import (
    CandidateWindow,
    ScanResult,
    SiteGeometry,
    enumerate_windows,
    membership_matrix,
    scan,
    secondary_clusters,
    window_indices,
)


@dataclass(frozen=True)
class PermutationPlan:
    permutations: int = 199
    seed: int = 0
    alpha_level: float = 0.05

    def __post_init__(self):
        if self.permutations < 1:
            raise ValueError("need at least one permutation")
        if not 0 < self.alpha_level < 1:
            raise ValueError("alpha_level must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if 1.0 / (1 + self.permutations) > self.alpha_level:
            warnings.warn(
                f"{self.permutations} permutations cannot reach p <= {self.alpha_level}",
                stacklevel=2,
            )


def permutation_pvalue(observed: float, null_stats) -> float:
    """``(1 + #{null >= observed}) / (1 + P)``."""
    null = np.asarray(null_stats, dtype=float)
    if null.size < 1:
        raise ValueError("need at least one null statistic")
    return (1 + int(np.count_nonzero(null >= observed))) / (1 + null.size)


def pvalues_against_null(indices, null_stats) -> np.ndarray:
    """Vectorised :func:`permutation_pvalue` for many observed values."""
    null = np.sort(np.asarray(null_stats, dtype=float))
    exceed = null.size - np.searchsorted(null, np.asarray(indices, dtype=float), side="left")
    return (1 + exceed) / (1 + null.size)


def permutation_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for permutation ``index`` of a plan seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def draw_permutation(seed: int, index: int, n: int) -> np.ndarray:
    return permutation_rng(seed, index).permutation(n)


def null_statistics(
    ranks: np.ndarray, membership: np.ndarray, plan: PermutationPlan
) -> np.ndarray:
    """Maximum index over windows for each random relabelling of the rank rows."""
    n = ranks.shape[0]
    out = np.empty(plan.permutations)
    for b in range(plan.permutations):
        perm = draw_permutation(plan.seed, b, n)
        out[b] = window_indices(ranks[perm], membership).max()
    return out


def null_statistics_refit(
    scores: np.ndarray,
    membership: np.ndarray,
    plan: PermutationPlan,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Same as :func:`null_statistics` but refitting the transform on every
    permuted score matrix.  Slower; kept to check the shortcut."""
    n = scores.shape[0]
    out = np.empty(plan.permutations)
    for b in range(plan.permutations):
        perm = draw_permutation(plan.seed, b, n)
        rs = fit_transform_matrix(scores[perm], tol=tol, max_iter=max_iter)
        out[b] = window_indices(rs.ranks, membership).max()
    return out


def run_inference(
    scores,
    geometry: SiteGeometry,
    plan: PermutationPlan,
    windows: list[CandidateWindow] | None = None,
    max_fraction: float = 0.5,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    refit: bool = False,
):
    """Scan the observed scores and attach permutation p-values.

    Every window's p-value compares its own index with the null distribution
    of the maximum.  Reported clusters are windows with ``p <= alpha_level``
    that share no site with a better-ranked reported cluster.

    Returns ``(ScanResult, RankSet)``.
    """
    z = scores.scores if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != geometry.n:
        raise ValueError(f"{z.shape[0]} score rows for {geometry.n} sites")
    if windows is None:
        windows = enumerate_windows(geometry, max_fraction)

    rank_set = fit_transform_matrix(z, tol=tol, max_iter=max_iter)
    result = scan(rank_set, windows)
    membership = membership_matrix(result.windows, geometry.n)
    if refit:
        null = null_statistics_refit(z, membership, plan, tol=tol, max_iter=max_iter)
    else:
        null = null_statistics(rank_set.ranks, membership, plan)

    result.null_statistics = null
    result.p_values = pvalues_against_null(result.indices, null)
    result.clusters = secondary_clusters(
        result, lambda pos: result.p_values[pos] <= plan.alpha_level
    )
    return result, rank_set
