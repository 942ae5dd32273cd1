"""End-to-end scan: signatures, PCA, ranks, windows, permutation test."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .inference import PermutationPlan, run_inference
from .pca import ScoreMatrix, fit_pca, select_k
from .ranks import RankSet
from .scan import CandidateWindow, ScanResult, SiteGeometry, enumerate_windows
from .signature import (
    DEFAULT_MAX_LENGTH,
    FunctionalSample,
    TruncationOrder,
    signature_matrix,
    truncation_for_budget,
)


@dataclass
class SigFSSResult:
    truncation: TruncationOrder
    pca: ScoreMatrix
    ranks: RankSet
    scan: ScanResult
    plan: PermutationPlan

    @property
    def mlc(self) -> CandidateWindow:
        return self.scan.mlc

    @property
    def mlc_pvalue(self) -> float:
        return float(self.scan.p_values[0])

    @property
    def rejected(self) -> bool:
        return self.mlc_pvalue <= self.plan.alpha_level


def sigfss(
    samples: Sequence[FunctionalSample],
    geometry: SiteGeometry,
    plan: PermutationPlan = PermutationPlan(),
    order_budget: int = DEFAULT_MAX_LENGTH,
    k_rule: str = "elbow",
    max_fraction: float = 0.5,
    standardize: bool = False,
    windows: list[CandidateWindow] | None = None,
) -> SigFSSResult:
    """Run the signature-based functional scan on one dataset.

    ``samples[i]`` must belong to site ``i`` of ``geometry``.  The truncation
    order is the largest one whose augmented signature fits ``order_budget``.
    """
    if len(samples) != geometry.n:
        raise ValueError(f"{len(samples)} samples for {geometry.n} sites")
    dim = samples[0].dim
    trunc = truncation_for_budget(dim, order_budget)
    sigs = signature_matrix(samples, trunc.order, augment=True, max_length=order_budget)
    pca = fit_pca(sigs, standardize=standardize)
    pca = pca.with_k(select_k(pca, k_rule))
    if windows is None:
        windows = enumerate_windows(geometry, max_fraction)
    result, rank_set = run_inference(pca, geometry, plan, windows=windows)
    return SigFSSResult(trunc, pca, rank_set, result, plan)
