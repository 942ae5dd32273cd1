"""Signature-based spatial scan statistic for functional data."""

__version__ = "0.1.0"

from .inference import PermutationPlan, permutation_pvalue, run_inference
from .pca import ScoreMatrix, fit_pca, select_k, select_k_elbow, select_k_threshold
from .pipeline import SigFSSResult, sigfss
from .ranks import RankSet, fit_transform_matrix, multivariate_ranks, spatial_sign
from .scan import (
    CandidateWindow,
    ScanResult,
    SiteGeometry,
    concentration_index,
    enumerate_windows,
    scan,
    secondary_clusters,
)
from .signature import (
    FunctionalSample,
    augment_path,
    max_order_for_budget,
    signature_length,
    signature_matrix,
    truncated_signature,
)

__all__ = [
    "CandidateWindow",
    "FunctionalSample",
    "PermutationPlan",
    "RankSet",
    "ScanResult",
    "ScoreMatrix",
    "SigFSSResult",
    "SiteGeometry",
    "augment_path",
    "concentration_index",
    "enumerate_windows",
    "fit_pca",
    "fit_transform_matrix",
    "max_order_for_budget",
    "multivariate_ranks",
    "permutation_pvalue",
    "run_inference",
    "scan",
    "secondary_clusters",
    "select_k",
    "select_k_elbow",
    "select_k_threshold",
    "sigfss",
    "signature_length",
    "signature_matrix",
    "spatial_sign",
    "truncated_signature",
]
