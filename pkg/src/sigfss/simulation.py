"""Synthetic functional datasets with a planted spatial cluster, and the
replicated detection study built on them.

Each site observes ``X_i(t) = mu(t) + Delta(t) 1{i in w} + eps_i(t)`` on a
uniform grid of ``[0, 1]``, where ``eps_i`` is a truncated Karhunen-Loeve
expansion with variances ``1.5 * 0.2**k`` on the basis ``theta_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .inference import PermutationPlan
from .pipeline import sigfss
from .scan import SiteGeometry, enumerate_windows, max_window_size
from .signature import DEFAULT_MAX_LENGTH, FunctionalSample

DELTA_KINDS = ("delta1", "delta2", "delta3", "delta4")
INNOVATIONS = ("gaussian", "student", "exponential")

# intensity grids used for the published power curves
PAPER_ALPHA_GRIDS = {
    "delta1": (0.0, 0.25, 0.5, 0.75, 1.0),
    "delta2": (0.0, 1.0, 2.0, 3.0, 4.0),
    "delta3": (0.0, 0.5, 1.0, 1.5, 2.0),
    "delta4": (0.0, 0.125, 0.25, 0.375, 0.5),
}
PAPER_RHOS = (0.2, 0.5, 0.8)


def _delta_kind(kind) -> str:
    key = str(kind).lower().replace("Δ", "delta").replace("_", "")
    if key in {"1", "2", "3", "4"}:
        key = "delta" + key
    if key not in DELTA_KINDS:
        raise ValueError(f"unknown cluster shape {kind!r}")
    return key


@dataclass(frozen=True)
class SimConfig:
    dim: int = 1
    cluster_sites: tuple[int, ...] = ()
    delta_kind: str = "delta1"
    alpha: float = 0.0
    innovation: str = "gaussian"
    rho: float = 0.0
    time_points: int = 101
    basis_terms: int = 100
    replicate_seed: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        object.__setattr__(self, "delta_kind", _delta_kind(self.delta_kind))
        if self.innovation not in INNOVATIONS:
            raise ValueError(f"unknown innovation {self.innovation!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.time_points < 2 or self.basis_terms < 1:
            raise ValueError("need time_points >= 2 and basis_terms >= 1")
        object.__setattr__(self, "cluster_sites", tuple(sorted(set(self.cluster_sites))))


@dataclass(frozen=True)
class DetectionRates:
    tpr: float
    fpr: float
    ppv: float


@dataclass
class DetectionMetrics:
    power: float
    tpr: float
    fpr: float
    ppv: float
    replicates_rejecting: int
    replicates: int
    mean_detected_size: float = math.nan
    p_values: list[float] = field(default_factory=list, repr=False)


def basis_theta(k: int, t):
    """Fourier-type basis: 1, then sqrt(2) sin(k pi t) for even k and
    sqrt(2) cos((k - 1) pi t) for odd k > 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    t = np.asarray(t, dtype=float)
    if k == 1:
        return np.ones_like(t) if t.ndim else 1.0
    if k % 2 == 0:
        return math.sqrt(2) * np.sin(k * np.pi * t)
    return math.sqrt(2) * np.cos((k - 1) * np.pi * t)


def mean_function(dim: int, t) -> np.ndarray:
    """Mean curve; shape ``(dim,)`` for scalar ``t`` else ``(len(t), dim)``."""
    t = np.asarray(t, dtype=float)
    first = np.sin(2 * np.pi * t**2) ** 5
    if dim == 1:
        comps = [first]
    elif dim == 2:
        comps = [first, 1 + 2.3 * t + 3.4 * t**2 + 1.5 * t**3]
    else:
        raise ValueError("dim must be 1 or 2")
    return np.stack(comps, axis=-1)


def delta_function(kind, alpha: float, t, dim: int = 1) -> np.ndarray:
    """Cluster shift, identical in every component."""
    kind = _delta_kind(kind)
    t = np.asarray(t, dtype=float)
    if kind == "delta1":
        shape = t
    elif kind == "delta2":
        shape = t * (1 - t)
    elif kind == "delta3":
        shape = np.exp(-100 * (t - 0.5) ** 2) / 3
    else:
        shape = np.cos(4 * np.pi * (t - 0.5))
    return np.repeat((alpha * shape)[..., None], dim, axis=-1)


def sample_innovation(kind: str, dim: int, rho: float, rng: np.random.Generator, size=()):
    """Standardised innovations ``Z`` with unit marginal variances.

    Returns an array of shape ``size + (dim,)``.  ``rho`` is the correlation of
    the two components when ``dim == 2`` (the copula correlation for the
    exponential kind).
    """
    size = (size,) if isinstance(size, int) else tuple(size)
    cov = np.array([[1.0, rho], [rho, 1.0]]) if dim == 2 else np.eye(1)
    if kind == "gaussian":
        return rng.multivariate_normal(np.zeros(dim), cov, size=size, method="cholesky")
    if kind == "student":
        u = rng.multivariate_normal(np.zeros(dim), cov / 2, size=size, method="cholesky")
        v = rng.chisquare(4, size=size)
        return u * (v / 4)[..., None] ** -0.5
    if kind == "exponential":
        g = rng.multivariate_normal(np.zeros(dim), cov, size=size, method="cholesky")
        # Gaussian copula with Exp(rate 1/2) marginals: mean 2, sd 2
        u = -2.0 * stats.norm.logsf(g)
        return (u - 2.0) / 2.0
    raise ValueError(f"unknown innovation {kind!r}")


def kl_weights(basis_terms: int = 100) -> np.ndarray:
    k = np.arange(1, basis_terms + 1)
    return np.sqrt(1.5 * 0.2**k)


def basis_matrix(t, basis_terms: int = 100) -> np.ndarray:
    """``(len(t), basis_terms)`` matrix of ``theta_k(t_j)``."""
    return np.column_stack([basis_theta(k, t) for k in range(1, basis_terms + 1)])


def time_grid(time_points: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, time_points)


def error_variance(t, basis_terms: int = 100) -> np.ndarray:
    """Pointwise variance of the error process for unit-variance innovations."""
    return (basis_matrix(np.atleast_1d(t), basis_terms) ** 2 * (1.5 * 0.2 ** np.arange(1, basis_terms + 1))).sum(axis=1)


def generate_dataset(config: SimConfig, geometry: SiteGeometry) -> list[FunctionalSample]:
    n = geometry.n
    if any(not 0 <= s < n for s in config.cluster_sites):
        raise ValueError("cluster site index out of range")
    rng = np.random.default_rng(config.replicate_seed)
    t = time_grid(config.time_points)
    z = sample_innovation(config.innovation, config.dim, config.rho, rng, size=(n, config.basis_terms))
    # eps[i, j, c] = sum_k z[i, k, c] w_k theta_k(t_j)
    eps = np.einsum("ikc,jk->ijc", z * kl_weights(config.basis_terms)[None, :, None], basis_matrix(t, config.basis_terms))
    values = mean_function(config.dim, t)[None] + eps
    if config.cluster_sites and config.alpha != 0:
        values[list(config.cluster_sites)] += delta_function(config.delta_kind, config.alpha, t, config.dim)
    return [FunctionalSample(geometry.site_ids[i], t, values[i]) for i in range(n)]


def evaluate_detection(detected: Iterable[int], truth: Iterable[int], n: int) -> DetectionRates:
    detected, truth = set(detected), set(truth)
    if not truth:
        raise ValueError("empty true cluster")
    if not detected:
        raise ValueError("empty detected cluster")
    if len(truth) >= n:
        raise ValueError("true cluster covers every site")
    hit = len(detected & truth)
    return DetectionRates(
        tpr=hit / len(truth),
        fpr=len(detected - truth) / (n - len(truth)),
        ppv=hit / len(detected),
    )


def default_geometry(n: int = 94, cluster_size: int = 8, seed: int = 20240101):
    """Uniform random sites on the unit square with a planted disc cluster.

    The cluster is the site closest to the square's centre and its
    ``cluster_size - 1`` nearest neighbours, which is itself a candidate
    window.  Returns ``(geometry, cluster_sites)``.
    """
    if cluster_size > max_window_size(n):
        raise ValueError("cluster larger than half the sites")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0, 1, size=(n, 2))
    geometry = SiteGeometry(coords, tuple(f"s{i:03d}" for i in range(n)))
    center = int(np.argmin(((coords - 0.5) ** 2).sum(axis=1)))
    dist = geometry.distances()[center]
    order = np.argsort(dist, kind="stable")
    if dist[order[cluster_size - 1]] == dist[order[cluster_size]]:
        raise ValueError("planted cluster is not a disc; change the seed")
    return geometry, tuple(sorted(int(i) for i in order[:cluster_size]))


def study_grid(
    dims=(1,),
    deltas=DELTA_KINDS,
    innovations=("gaussian",),
    alphas=None,
    rhos=PAPER_RHOS,
    cluster_sites: Sequence[int] = (),
) -> list[SimConfig]:
    """Cartesian grid of configurations.

    ``alphas`` may be a sequence used for every shape, a mapping from shape
    to sequence, or ``None`` for the published grids.  ``rhos`` only applies
    to ``dim == 2``.
    """
    configs = []
    for dim in dims:
        for delta in deltas:
            delta = _delta_kind(delta)
            if alphas is None:
                grid = PAPER_ALPHA_GRIDS[delta]
            elif isinstance(alphas, dict):
                grid = alphas[delta]
            else:
                grid = alphas
            for innovation in innovations:
                for rho in (rhos if dim == 2 else (0.0,)):
                    for alpha in grid:
                        configs.append(
                            SimConfig(dim, tuple(cluster_sites), delta, float(alpha), innovation, float(rho))
                        )
    return configs


def replicate_seeds(seed: int, config_index: int, replicate: int) -> tuple[int, int]:
    """Independent (data, permutation) seeds for one replicate."""
    state = np.random.SeedSequence([seed, config_index, replicate]).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def run_replicate(
    config: SimConfig,
    geometry: SiteGeometry,
    plan: PermutationPlan,
    k_rule: str = "elbow",
    order_budget: int = DEFAULT_MAX_LENGTH,
    windows=None,
):
    samples = generate_dataset(config, geometry)
    return sigfss(samples, geometry, plan, order_budget=order_budget, k_rule=k_rule, windows=windows)


def run_study(
    configs: Sequence[SimConfig],
    geometry: SiteGeometry,
    replicates: int = 100,
    permutations: int = 199,
    alpha_level: float = 0.05,
    seed: int = 0,
    k_rule: str = "elbow",
    order_budget: int = DEFAULT_MAX_LENGTH,
    progress=None,
) -> list[DetectionMetrics]:
    """Power and conditional TPR/FPR/PPV of the MLC for each configuration."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    windows = enumerate_windows(geometry)
    table = []
    for ci, config in enumerate(configs):
        truth = config.cluster_sites
        if not truth:
            raise ValueError("configuration has no planted cluster sites")
        rows, pvals, sizes = [], [], []
        for r in range(replicates):
            data_seed, perm_seed = replicate_seeds(seed, ci, r)
            plan = PermutationPlan(permutations, perm_seed, alpha_level)
            res = run_replicate(replace(config, replicate_seed=data_seed), geometry, plan, k_rule, order_budget, windows)
            pvals.append(res.mlc_pvalue)
            if res.rejected:
                rows.append(evaluate_detection(res.mlc.members, truth, geometry.n))
                sizes.append(res.mlc.size)
            if progress is not None:
                progress(ci, r)
        hits = len(rows)
        mean = (lambda xs: float(np.mean(xs)) if xs else math.nan)
        table.append(
            DetectionMetrics(
                power=hits / replicates,
                tpr=mean([x.tpr for x in rows]),
                fpr=mean([x.fpr for x in rows]),
                ppv=mean([x.ppv for x in rows]),
                replicates_rejecting=hits,
                replicates=replicates,
                mean_detected_size=mean(sizes),
                p_values=pvals,
            )
        )
    return table
