"""Circular scanning windows and the sign-rank concentration index."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .ranks import RankSet


@dataclass(frozen=True)
class SiteGeometry:
    """Planar site locations; both axes share one length unit."""

    coordinates: np.ndarray
    site_ids: tuple = ()

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coordinates must have shape (n, 2)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        ids = tuple(self.site_ids) if len(self.site_ids) else tuple(range(len(coords)))
        if len(ids) != len(coords):
            raise ValueError("site_ids and coordinates differ in length")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate site ids")
        if len(np.unique(coords, axis=0)) != len(coords):
            raise ValueError("duplicate site coordinates")
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "site_ids", ids)

    @property
    def n(self) -> int:
        return len(self.coordinates)

    def distances(self) -> np.ndarray:
        diff = self.coordinates[:, None, :] - self.coordinates[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))


@dataclass(frozen=True)
class CandidateWindow:
    """Sites inside the closed disc of ``radius`` around site ``center``."""

    members: tuple[int, ...]
    center: int
    radius: float

    @property
    def size(self) -> int:
        return len(self.members)

    def sort_key(self) -> tuple:
        return (self.size, self.members)


@dataclass
class ScanResult:
    """Windows ordered by decreasing concentration index.

    ``p_values`` is aligned with ``windows`` once inference has run;
    ``clusters`` lists the reported (significant, non-overlapping) windows
    as positions into ``windows``.
    """

    statistic: float
    windows: list[CandidateWindow]
    indices: np.ndarray
    p_values: np.ndarray | None = None
    null_statistics: np.ndarray | None = None
    clusters: list[int] = field(default_factory=list)

    @property
    def mlc(self) -> CandidateWindow:
        return self.windows[0]


def max_window_size(n: int, max_fraction: float = 0.5) -> int:
    if not 0 < max_fraction <= 0.5:
        raise ValueError("max_fraction must lie in (0, 0.5]")
    return int(np.floor(max_fraction * n + 1e-9))


def enumerate_windows(
    geometry: SiteGeometry | np.ndarray, max_fraction: float = 0.5
) -> list[CandidateWindow]:
    """All distinct closed discs centred on a site and passing through a site.

    Member sets larger than ``max_fraction * n`` are dropped.  The result is
    sorted by size, then by member list.  Each member set is stored with the
    first (center, radius) that produced it, scanning centres in index order
    and radii upward.
    """
    if not isinstance(geometry, SiteGeometry):
        geometry = SiteGeometry(geometry)
    n = geometry.n
    limit = max_window_size(n, max_fraction)
    if limit < 1:
        raise ValueError("too few sites")
    dist = geometry.distances()
    seen: dict[tuple[int, ...], CandidateWindow] = {}
    for i in range(n):
        row = dist[i]
        order = np.argsort(row, kind="stable")
        for pos in range(n):
            radius = row[order[pos]]
            # only the last site of a tie group defines a new disc
            if pos + 1 < n and row[order[pos + 1]] == radius:
                continue
            if pos + 1 > limit:
                break
            members = tuple(sorted(int(j) for j in order[: pos + 1]))
            if members not in seen:
                seen[members] = CandidateWindow(members, i, float(radius))
    return sorted(seen.values(), key=CandidateWindow.sort_key)


def membership_matrix(windows: Sequence[CandidateWindow], n: int) -> np.ndarray:
    mat = np.zeros((len(windows), n))
    for r, w in enumerate(windows):
        mat[r, list(w.members)] = 1.0
    return mat


def _rank_array(ranks) -> np.ndarray:
    arr = ranks.ranks if isinstance(ranks, RankSet) else np.asarray(ranks, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def window_indices(ranks, membership: np.ndarray) -> np.ndarray:
    """Concentration index of every window (rows of ``membership``)."""
    r = _rank_array(ranks)
    n, k = r.shape
    total_sq = np.einsum("ij,ij->", r, r)
    if total_sq == 0:
        raise ValueError("degenerate ranks: all ranks are zero")
    sizes = membership.sum(axis=1)
    inside = membership @ r
    outside = r.sum(axis=0) - inside
    ss_in = np.einsum("ij,ij->i", inside, inside) / sizes
    ss_out = np.einsum("ij,ij->i", outside, outside) / (n - sizes)
    return (k * n / total_sq) * (ss_in + ss_out)


def concentration_index(ranks, window: CandidateWindow) -> float:
    """Sign-rank two-sample statistic of ``window`` against its complement."""
    r = _rank_array(ranks)
    n, k = r.shape
    total_sq = float(np.einsum("ij,ij->", r, r))
    if total_sq == 0:
        raise ValueError("degenerate ranks: all ranks are zero")
    inside = np.zeros(n, dtype=bool)
    inside[list(window.members)] = True
    if not inside.any() or inside.all():
        raise ValueError("window must be a proper non-empty subset of the sites")
    mean_in = r[inside].mean(axis=0)
    mean_out = r[~inside].mean(axis=0)
    return (k * n / total_sq) * (
        inside.sum() * mean_in @ mean_in + (~inside).sum() * mean_out @ mean_out
    )


TIE_RTOL = 1e-10


def order_windows(windows: Sequence[CandidateWindow], indices: np.ndarray, rtol: float = TIE_RTOL) -> np.ndarray:
    """Positions sorted by decreasing index; ties go to the smaller window, then
    the lexicographically smaller member list.

    Indices within ``rtol`` of the leading value of their group count as tied,
    so exact ties (a window and its complement, say) do not hinge on rounding.
    """
    indices = np.asarray(indices, dtype=float)
    rough = sorted(range(len(windows)), key=lambda r: (-indices[r], windows[r].size, windows[r].members))
    order: list[int] = []
    start = 0
    while start < len(rough):
        lead = indices[rough[start]]
        stop = start + 1
        while stop < len(rough) and lead - indices[rough[stop]] <= rtol * abs(lead):
            stop += 1
        order.extend(sorted(rough[start:stop], key=lambda r: (windows[r].size, windows[r].members)))
        start = stop
    return np.array(order, dtype=int)


def scan(ranks, windows: Sequence[CandidateWindow]) -> ScanResult:
    """Evaluate every window; the first of the ordered windows is the MLC."""
    if not windows:
        raise ValueError("no candidate windows")
    r = _rank_array(ranks)
    indices = window_indices(r, membership_matrix(windows, r.shape[0]))
    order = order_windows(windows, indices)
    return ScanResult(
        statistic=float(indices[order[0]]),
        windows=[windows[i] for i in order],
        indices=indices[order],
    )


def secondary_clusters(
    result: ScanResult, significant: Callable[[int], bool]
) -> list[int]:
    """Walk the ordered windows, keeping significant ones that share no site
    with an already kept window.

    ``significant`` receives a position into ``result.windows``.  Returns the
    kept positions; the first is the MLC whenever the MLC is significant.
    """
    kept: list[int] = []
    used: set[int] = set()
    for pos, window in enumerate(result.windows):
        if not significant(pos):
            continue
        if used.isdisjoint(window.members):
            kept.append(pos)
            used.update(window.members)
    return kept


def site_labels(geometry: SiteGeometry, window: CandidateWindow) -> list[Hashable]:
    return [geometry.site_ids[i] for i in window.members]
