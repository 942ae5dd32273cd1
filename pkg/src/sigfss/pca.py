"""Principal component scores of signature vectors and choice of K."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# guards cumulative-inertia comparisons against rounding in the partial sums
_INERTIA_EPS = 1e-12


@dataclass(frozen=True)
class ScoreMatrix:
    """PCA of an ``n x q`` matrix.

    ``scores`` holds the first ``k`` columns of the full score matrix; the
    full spectrum is always kept so ``k`` can be changed with :meth:`with_k`.
    """

    scores: np.ndarray
    eigenvalues: np.ndarray
    cumulative_inertia: np.ndarray
    k: int
    axes: np.ndarray
    mean: np.ndarray
    all_scores: np.ndarray
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.all_scores.shape[0]

    def with_k(self, k: int) -> "ScoreMatrix":
        if not 1 <= k <= len(self.eigenvalues):
            raise ValueError(f"k={k} outside 1..{len(self.eigenvalues)}")
        return replace(self, k=k, scores=self.all_scores[:, :k])


def fit_pca(data: np.ndarray, standardize: bool = False) -> ScoreMatrix:
    """Covariance PCA through the SVD of the centred data.

    Each axis is oriented so that its largest-magnitude loading is positive.
    With ``standardize=True`` columns are scaled to unit variance first
    (constant columns are left at zero).
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D array")
    n, q = data.shape
    if n < 2:
        raise ValueError("need at least 2 rows for PCA")
    if q < 1:
        raise ValueError("need at least 1 column")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")

    mean = data.mean(axis=0)
    if np.all(np.ptp(data, axis=0) == 0):
        empty = np.empty(0)
        return ScoreMatrix(
            scores=np.zeros((n, 0)),
            eigenvalues=empty,
            cumulative_inertia=empty,
            k=0,
            axes=np.zeros((0, q)),
            mean=mean,
            all_scores=np.zeros((n, 0)),
            degenerate=True,
        )

    centred = data - mean
    if standardize:
        sd = centred.std(axis=0, ddof=1)
        centred = np.divide(centred, sd, out=np.zeros_like(centred), where=sd > 0)

    u, s, vt = np.linalg.svd(centred, full_matrices=False)
    r = min(n - 1, q)
    u, s, vt = u[:, :r], s[:r], vt[:r]
    flip = np.sign(vt[np.arange(r), np.argmax(np.abs(vt), axis=1)])
    flip[flip == 0] = 1.0
    u, vt = u * flip, vt * flip[:, None]

    eigenvalues = s**2 / (n - 1)
    total = eigenvalues.sum()
    cumulative = np.cumsum(eigenvalues) / total
    all_scores = u * s
    return ScoreMatrix(
        scores=all_scores,
        eigenvalues=eigenvalues,
        cumulative_inertia=cumulative,
        k=r,
        axes=vt,
        mean=mean,
        all_scores=all_scores,
    )


def _check_spectrum(eigenvalues) -> np.ndarray:
    eig = np.asarray(eigenvalues, dtype=float)
    if eig.ndim != 1 or eig.size == 0:
        raise ValueError("empty spectrum")
    if not eig.sum() > 0:
        raise ValueError("degenerate spectrum")
    return eig


def select_k_threshold(eigenvalues, threshold: float) -> int:
    """Smallest K whose cumulative inertia reaches ``threshold``."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    eig = _check_spectrum(eigenvalues)
    cumulative = np.cumsum(eig) / eig.sum()
    return int(np.argmax(cumulative >= threshold - _INERTIA_EPS)) + 1


def select_k_elbow(eigenvalues, min_gain: float = 0.01, k_max: int = 20) -> int:
    """Automated elbow of the cumulative-inertia curve.

    Returns the smallest ``k`` such that adding component ``k + 1`` would
    raise the cumulative inertia by less than ``min_gain``; components past
    the end of the spectrum count as zero gain.  The result is capped at
    ``k_max``.
    """
    eig = _check_spectrum(eigenvalues)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    gains = np.append(eig[1:], 0.0) / eig.sum()
    k = int(np.argmax(gains < min_gain)) + 1
    return min(k, k_max)


def parse_k_rule(rule: str) -> tuple[str, float | None]:
    """Parse ``"elbow"`` or ``"threshold:<value>"``."""
    rule = rule.strip().lower()
    if rule == "elbow":
        return "elbow", None
    if rule.startswith("threshold:"):
        value = float(rule.split(":", 1)[1])
        if not 0 < value <= 1:
            raise ValueError(f"threshold must lie in (0, 1], got {value}")
        return "threshold", value
    raise ValueError(f"unknown K rule {rule!r}; use 'elbow' or 'threshold:<value>'")


def select_k(pca: ScoreMatrix, rule: str = "elbow") -> int:
    """Apply a K rule to a fitted PCA, keeping K <= n - 2 so ranks stay well posed."""
    if pca.degenerate:
        raise ValueError("degenerate spectrum")
    kind, value = parse_k_rule(rule)
    cap = max(1, min(pca.n - 2, len(pca.eigenvalues)))
    if kind == "elbow":
        return select_k_elbow(pca.eigenvalues, k_max=min(cap, 20))
    return min(select_k_threshold(pca.eigenvalues, value), cap)
