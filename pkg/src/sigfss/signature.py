"""Truncated path signatures of sampled functions.

A sampled function is turned into a continuous path by piecewise-linear
interpolation of its observations.  The signature of a linear segment with
increment ``delta`` is the tensor exponential ``exp(delta)``; the signature of
the whole path is assembled segment by segment with Chen's identity.

Coefficients are stored flat, level by level (words of length 1, then 2, ...),
with the words of each level in lexicographic order over the alphabet
``{1, ..., q}``.  A level-``d`` block therefore has the same memory layout as a
C-ordered tensor of shape ``(q,) * d``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from numba import njit

DEFAULT_MAX_LENGTH = 10_000


@dataclass(frozen=True)
class FunctionalSample:
    """One site's sampled function.

    ``values`` row ``i`` is the observation at ``times[i]``.  A 1-D ``values``
    array is read as a univariate function.
    """

    site_id: Hashable
    times: np.ndarray
    values: np.ndarray
    augmented: bool = field(default=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.ndim != 2:
            raise ValueError("times must be 1-D and values 1-D or 2-D")
        if len(times) < 2:
            raise ValueError(f"site {self.site_id!r}: need at least 2 time points")
        if values.shape[0] != len(times):
            raise ValueError(
                f"site {self.site_id!r}: {len(times)} times but {values.shape[0]} value rows"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError(f"site {self.site_id!r}: non-finite times or values")
        steps = np.diff(times)
        # the basepoint row of an augmented path repeats the first time
        if np.any(steps < 0) or (not self.augmented and np.any(steps <= 0)):
            raise ValueError(f"site {self.site_id!r}: time grid is not strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class TruncationOrder:
    order: int
    path_dim: int
    length: int


def signature_length(path_dim: int, order: int) -> int:
    """Number of coefficients in the truncated signature without the leading 1."""
    if path_dim < 1 or order < 1:
        raise ValueError("path_dim and order must be >= 1")
    if path_dim == 1:
        return order
    return (path_dim ** (order + 1) - path_dim) // (path_dim - 1)


def max_order_for_budget(path_dim: int, budget: int = DEFAULT_MAX_LENGTH) -> int:
    """Largest truncation order whose signature length fits in ``budget``."""
    if budget < path_dim:
        raise ValueError("budget too small for order 1")
    if path_dim == 1:
        return budget
    order = 1
    while signature_length(path_dim, order + 1) <= budget:
        order += 1
    return order


def truncation_for_budget(dim: int, budget: int = DEFAULT_MAX_LENGTH) -> TruncationOrder:
    """Truncation used for a ``dim``-dimensional function after augmentation."""
    q = dim + 1
    order = max_order_for_budget(q, budget)
    return TruncationOrder(order=order, path_dim=q, length=signature_length(q, order))


def augment_path(sample: FunctionalSample) -> FunctionalSample:
    """Prepend a zero observation and append time as the last channel.

    The prepended row sits at the first observation time, so its time
    coordinate equals that of the first real observation.
    """
    t = sample.times
    zero = np.zeros((1, sample.dim + 1))
    zero[0, -1] = t[0]
    body = np.column_stack([sample.values, t])
    return FunctionalSample(
        site_id=sample.site_id,
        times=np.concatenate([t[:1], t]),
        values=np.vstack([zero, body]),
        augmented=True,
    )


def word_list(path_dim: int, order: int) -> list[tuple[int, ...]]:
    """Words (1-based letters) in coefficient order."""
    letters = range(1, path_dim + 1)
    return [w for d in range(1, order + 1) for w in itertools.product(letters, repeat=d)]


def word_labels(path_dim: int, order: int) -> list[str]:
    return ["S_" + "_".join(map(str, w)) for w in word_list(path_dim, order)]


@njit(cache=True)
def _path_kernel(points, order, out):
    """Accumulate the signature of one piecewise-linear path into ``out``.

    Each segment multiplies the running signature by ``exp(delta)`` using
    Horner's scheme level by level, highest level first, so the lower levels
    read are still those of the previous step.
    """
    m, q = points.shape
    offsets = np.zeros(order + 1, dtype=np.int64)
    size = 1
    for d in range(1, order + 1):
        size *= q
        offsets[d] = offsets[d - 1] + size
    acc = np.empty(size)
    delta = np.empty(q)
    scaled = np.empty(q)
    for s in range(m - 1):
        for c in range(q):
            delta[c] = points[s + 1, c] - points[s, c]
        for d in range(order, 0, -1):
            for c in range(q):
                acc[c] = delta[c] / d
            cur = q
            for j in range(1, d):
                base = offsets[j - 1]
                for c in range(q):
                    scaled[c] = delta[c] / (d - j)
                # acc <- (acc + level_j) (x) scaled, in place from the back
                for idx in range(cur - 1, -1, -1):
                    v = acc[idx] + out[base + idx]
                    for c in range(q - 1, -1, -1):
                        acc[idx * q + c] = v * scaled[c]
                cur *= q
            base = offsets[d - 1]
            for idx in range(cur):
                out[base + idx] += acc[idx]


def batch_signature(paths: np.ndarray, order: int) -> np.ndarray:
    """Signatures of ``n`` piecewise-linear paths sharing a point count.

    ``paths`` has shape ``(n, m, q)``; the result has shape
    ``(n, signature_length(q, order))``.
    """
    paths = np.ascontiguousarray(paths, dtype=float)
    if paths.ndim != 3:
        raise ValueError("paths must have shape (n, m, q)")
    if order < 1:
        raise ValueError("order must be >= 1")
    n, m, q = paths.shape
    out = np.zeros((n, signature_length(q, order)))
    for i in range(n):
        _path_kernel(paths[i], order, out[i])
    return out


def path_signature(points: np.ndarray, order: int) -> np.ndarray:
    """Signature of the piecewise-linear path through ``points`` (shape ``(m, q)``)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    return batch_signature(points[None], order)[0]


def split_levels(coeffs: np.ndarray, path_dim: int, order: int) -> list[np.ndarray]:
    """Split a flat coefficient vector into its per-level blocks."""
    coeffs = np.asarray(coeffs, dtype=float)
    out, start = [], 0
    for d in range(1, order + 1):
        size = path_dim**d
        out.append(coeffs[start : start + size])
        start += size
    if start != coeffs.shape[-1]:
        raise ValueError("coefficient vector length does not match path_dim/order")
    return out


def chen_product(a: np.ndarray, b: np.ndarray, path_dim: int, order: int) -> np.ndarray:
    """Truncated tensor product of two signatures (concatenation of paths)."""
    la = [np.ones(1)] + split_levels(a, path_dim, order)
    lb = [np.ones(1)] + split_levels(b, path_dim, order)
    out = []
    for d in range(1, order + 1):
        level = np.zeros(path_dim**d)
        for k in range(d + 1):
            level += np.outer(la[k], lb[d - k]).ravel()
        out.append(level)
    return np.concatenate(out)


def _check_budget(path_dim: int, order: int, max_length: int | None) -> None:
    if max_length is not None and signature_length(path_dim, order) > max_length:
        raise ValueError(
            f"signature budget exceeded: length {signature_length(path_dim, order)} > {max_length}"
        )


def truncated_signature(
    sample: FunctionalSample, order: int, max_length: int | None = DEFAULT_MAX_LENGTH
) -> np.ndarray:
    """Shifted truncated signature of one sample (no augmentation applied)."""
    steps = np.diff(sample.times)
    if np.any(steps < 0) or (not sample.augmented and np.any(steps <= 0)):
        raise ValueError("time grid is not increasing")
    _check_budget(sample.dim, order, max_length)
    return path_signature(sample.values, order)


def signature_matrix(
    samples: Sequence[FunctionalSample],
    order: int,
    augment: bool = True,
    max_length: int | None = DEFAULT_MAX_LENGTH,
) -> np.ndarray:
    """Stack the signatures of all samples, one row per sample.

    """
    if not samples:
        raise ValueError("no samples")
    dims = {s.dim for s in samples}
    if len(dims) != 1:
        raise ValueError(f"samples have mixed dimensions {sorted(dims)}")
    if augment:
        samples = [augment_path(s) for s in samples]
    q = samples[0].dim
    _check_budget(q, order, max_length)
    out = np.zeros((len(samples), signature_length(q, order)))
    for i, s in enumerate(samples):
        _path_kernel(np.ascontiguousarray(s.values), order, out[i])
    return out
