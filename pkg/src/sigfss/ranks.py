"""Spatial signs, multivariate ranks and the rank standardising transform."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200
# bounds the (chunk, n, K) difference tensor built by multivariate_ranks
_CHUNK_ELEMENTS = 4_000_000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class RankSet:
    ranks: np.ndarray
    transform: np.ndarray
    condition_residual: float
    iterations: int = 0

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def k(self) -> int:
        return self.ranks.shape[1]


def spatial_sign(z):
    """``z / ||z||`` along the last axis, with the zero vector mapped to zero.

    A scalar is treated as a 1-vector and a scalar is returned.
    """
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr[None]
    norm = np.linalg.norm(arr, axis=-1, keepdims=True)
    out = np.divide(arr, norm, out=np.zeros_like(arr), where=norm > 0)
    return out[0] if scalar else out


def multivariate_ranks(scores: np.ndarray, transform: np.ndarray) -> np.ndarray:
    """Average spatial sign of transformed differences to every observation."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[:, None]
    transform = np.atleast_2d(np.asarray(transform, dtype=float))
    n, k = scores.shape
    if transform.shape != (k, k):
        raise ValueError(f"transform has shape {transform.shape}, expected {(k, k)}")
    y = scores @ transform.T
    out = np.empty_like(y)
    step = max(1, _CHUNK_ELEMENTS // max(1, n * k))
    for start in range(0, n, step):
        diff = y[start : start + step, None, :] - y[None, :, :]
        out[start : start + step] = spatial_sign(diff).sum(axis=1) / n
    return out


def condition_residual(ranks: np.ndarray) -> float:
    """Frobenius distance of ``(K/n) sum R R^T`` from ``(1/n) sum |R|^2 I``."""
    n, k = ranks.shape
    scatter = k * (ranks.T @ ranks) / n
    mean_sq = np.einsum("ij,ij->", ranks, ranks) / n
    return float(np.linalg.norm(scatter - mean_sq * np.eye(k)))


def _sym_power(mat: np.ndarray, power: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2)
    return (vecs * vals**power) @ vecs.T


def fit_transform_matrix(
    scores: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> RankSet:
    """Find the transform that makes the ranks' second moments spherical.

    Starting from the identity, the ranks' normalised scatter
    ``C = K * cov(R) / mean|R|^2`` is divided out (``A <- C^{-1/2} A``) until
    ``C`` is the identity to within ``tol``.  After each step ``A`` is replaced
    by the symmetric square root of ``A^T A`` (ranks then differ only by a
    rotation, which leaves the condition unchanged) and scaled to
    determinant 1.  Raises :class:`ConvergenceError` after ``max_iter`` steps.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[:, None]
    n, k = scores.shape
    if np.all(np.ptp(scores, axis=0) == 0):
        raise ValueError("zero ranks: all score rows are identical")

    if k == 1:
        transform = np.ones((1, 1))
        ranks = multivariate_ranks(scores, transform)
        return RankSet(ranks, transform, condition_residual(ranks), 0)

    if n < k + 2:
        raise ValueError(f"need n >= K + 2 observations, got n={n}, K={k}")

    transform = np.eye(k)
    residual = np.inf
    for it in range(max_iter + 1):
        ranks = multivariate_ranks(scores, transform)
        residual = condition_residual(ranks)
        if residual <= tol:
            return RankSet(ranks, transform, residual, it)
        if it == max_iter:
            break
        mean_sq = np.einsum("ij,ij->", ranks, ranks) / n
        scatter = k * (ranks.T @ ranks) / n / mean_sq
        step = _sym_power(scatter, -0.5) @ transform
        # symmetric polar factor from the SVD; forming step.T @ step would
        # square the condition number of badly scaled scores
        _, sv, vt = np.linalg.svd(step)
        transform = (vt.T * (sv / np.exp(np.log(sv).mean()))) @ vt
    raise ConvergenceError(
        f"transform did not converge in {max_iter} iterations (residual {residual:.3e})",
        residual,
    )
