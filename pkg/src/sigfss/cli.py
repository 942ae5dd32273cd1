"""Command-line interface: ``sigfss scan | simulate | signature``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .inference import PermutationPlan
from .io import (
    DatasetError,
    clusters_geojson,
    read_dataset,
    read_json,
    read_sites,
    write_json,
    write_signatures_csv,
    write_table_csv,
    write_windows_csv,
)
from .pca import parse_k_rule
from .pipeline import SigFSSResult, sigfss
from .scan import max_window_size
from .signature import (
    DEFAULT_MAX_LENGTH,
    max_order_for_budget,
    signature_matrix,
)
from .simulation import PAPER_RHOS, default_geometry, run_study, study_grid

log = logging.getLogger("sigfss")


@dataclass
class RunConfig:
    order_budget: int = DEFAULT_MAX_LENGTH
    k_rule: str = "elbow"
    permutations: int = 999
    seed: int = 0
    alpha_level: float = 0.05
    max_cluster_fraction: float = 0.5
    standardize: bool = False
    input: str | None = None
    out_dir: str = "."
    windows_csv: bool = False
    record_timing: bool = False

    def __post_init__(self):
        parse_k_rule(self.k_rule)
        if not 0 < self.max_cluster_fraction <= 0.5:
            raise ValueError("max_cluster_fraction must lie in (0, 0.5]")
        if self.order_budget < 2:
            raise ValueError("order_budget must be >= 2")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class StudyConfig:
    dims: list = field(default_factory=lambda: [1])
    deltas: list = field(default_factory=lambda: ["delta1"])
    innovations: list = field(default_factory=lambda: ["gaussian"])
    alphas: object = None
    rhos: list = field(default_factory=lambda: list(PAPER_RHOS))
    replicates: int = 100
    permutations: int = 199
    seed: int = 0
    alpha_level: float = 0.05
    k_rule: str = "elbow"
    order_budget: int = DEFAULT_MAX_LENGTH
    sites: str | None = None
    cluster_sites: list | None = None
    paper_grid: bool = False

    @classmethod
    def from_mapping(cls, data: dict) -> "StudyConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown study config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--order-budget", type=int, dest="order_budget")
    p.add_argument("--k-rule", dest="k_rule", help="elbow | threshold:<value>")
    p.add_argument("--permutations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, dest="alpha_level")
    p.add_argument("--max-cluster-frac", type=float, dest="max_cluster_fraction")
    p.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigfss", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="detect clusters in a long-format dataset")
    p.add_argument("input", nargs="?", help="dataset CSV (site_id,x,y,t,v1..vp)")
    _add_run_flags(p)
    p.add_argument("--standardize", action="store_true", default=None, help="scale signature coefficients before PCA")
    p.add_argument("--windows-csv", action="store_true", default=None, dest="windows_csv", help="also write per-window indices")
    p.add_argument("--timing", action="store_true", default=None, dest="record_timing", help="record wall-clock time in the report")

    p = sub.add_parser("simulate", help="run the simulation study")
    p.add_argument("--config", help="JSON study configuration")
    p.add_argument("--paper-grid", action="store_true", default=None, dest="paper_grid", help="use the published intensity and correlation grids")
    p.add_argument("--replicates", type=int)
    p.add_argument("--permutations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, dest="alpha_level")
    p.add_argument("--k-rule", dest="k_rule")
    p.add_argument("--order-budget", type=int, dest="order_budget")
    p.add_argument("--out-dir", dest="out_dir", default=".")

    p = sub.add_parser("signature", help="write per-site signature coefficients")
    p.add_argument("input")
    p.add_argument("--order", type=int, help="truncation order (default: largest within the budget)")
    p.add_argument("--order-budget", type=int, dest="order_budget", default=DEFAULT_MAX_LENGTH)
    p.add_argument("--no-augment", action="store_false", dest="augment", help="skip basepoint and time augmentation")
    p.add_argument("--out-dir", dest="out_dir", default=".")
    return parser


def _overrides(args: argparse.Namespace, names) -> dict:
    return {k: getattr(args, k) for k in names if getattr(args, k, None) is not None}


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    data = read_json(args.config) if args.config else {}
    data.update(_overrides(args, [f.name for f in dataclasses.fields(RunConfig)]))
    return RunConfig.from_mapping(data)


def _cluster_entry(result: SigFSSResult, geometry, pos: int) -> dict:
    w = result.scan.windows[pos]
    return {
        "sites": [geometry.site_ids[i] for i in w.members],
        "index": float(result.scan.indices[pos]),
        "p": float(result.scan.p_values[pos]),
    }


def build_report(result: SigFSSResult, geometry, config: RunConfig, n_windows: int, wall: float | None) -> dict:
    scan = result.scan
    reported = scan.clusters
    secondary = [p for p in reported if p != 0]
    return {
        "version": __version__,
        "config_echo": dataclasses.asdict(config),
        "truncation": {
            "order": result.truncation.order,
            "path_dim": result.truncation.path_dim,
            "length": result.truncation.length,
        },
        "pca": {
            "k": result.pca.k,
            "inertia": [float(v) for v in result.pca.cumulative_inertia],
            "eigenvalues": [float(v) for v in result.pca.eigenvalues],
        },
        "ranks": {
            "condition_residual": result.ranks.condition_residual,
            "iterations": result.ranks.iterations,
        },
        "lambda": scan.statistic,
        "mlc": _cluster_entry(result, geometry, 0) | {"significant": bool(0 in reported)},
        "secondary": [_cluster_entry(result, geometry, p) for p in secondary],
        "timing": {
            "sites": geometry.n,
            "windows": n_windows,
            "max_window_size": max_window_size(geometry.n, config.max_cluster_fraction),
            "permutations": config.permutations,
            "wall_seconds": wall,
        },
    }


def cmd_scan(config: RunConfig) -> dict:
    if not config.input:
        raise ValueError("no input dataset given")
    start = time.perf_counter()
    geometry, samples = read_dataset(config.input)
    plan = PermutationPlan(config.permutations, config.seed, config.alpha_level)
    result = sigfss(
        samples,
        geometry,
        plan,
        order_budget=config.order_budget,
        k_rule=config.k_rule,
        max_fraction=config.max_cluster_fraction,
        standardize=config.standardize,
    )
    out = Path(config.out_dir)
    wall = round(time.perf_counter() - start, 3) if config.record_timing else None
    report = build_report(result, geometry, config, len(result.scan.windows), wall)
    write_json(out / "report.json", report)

    clusters = []
    for rank, pos in enumerate(result.scan.clusters):
        w = result.scan.windows[pos]
        clusters.append(
            {
                "members": w.members,
                "kind": "mlc" if pos == 0 else "secondary",
                "index": float(result.scan.indices[pos]),
                "p": float(result.scan.p_values[pos]),
                "center": geometry.site_ids[w.center],
                "radius": w.radius,
            }
        )
    write_json(out / "clusters.geojson", clusters_geojson(geometry, clusters))
    if config.windows_csv:
        write_windows_csv(out / "windows.csv", geometry, result.scan)
    log.info("lambda=%.6g  mlc p=%.4g  clusters=%d", result.scan.statistic, result.mlc_pvalue, len(clusters))
    return report


def study_from_args(args: argparse.Namespace) -> StudyConfig:
    data = read_json(args.config) if args.config else {}
    data.update(_overrides(args, ["replicates", "permutations", "seed", "alpha_level", "k_rule", "order_budget", "paper_grid"]))
    return StudyConfig.from_mapping(data)


def study_configs(study: StudyConfig):
    """Geometry, planted cluster and configuration grid of a study."""
    if study.sites:
        geometry, cluster = read_sites(study.sites)
    else:
        geometry, cluster = default_geometry()
    if study.cluster_sites is not None:
        lookup = {sid: i for i, sid in enumerate(geometry.site_ids)}
        cluster = tuple(lookup[s] if s in lookup else int(s) for s in study.cluster_sites)
    if not cluster:
        raise ValueError("no planted cluster: give cluster_sites or a 'cluster' column in the site file")
    # no alphas given means the published grids
    alphas = None if study.paper_grid else study.alphas
    rhos = PAPER_RHOS if study.paper_grid else study.rhos
    configs = study_grid(study.dims, study.deltas, study.innovations, alphas, rhos, cluster)
    return geometry, cluster, configs


def cmd_simulate(study: StudyConfig, out_dir) -> list[dict]:
    geometry, cluster, configs = study_configs(study)
    metrics = run_study(
        configs,
        geometry,
        replicates=study.replicates,
        permutations=study.permutations,
        alpha_level=study.alpha_level,
        seed=study.seed,
        k_rule=study.k_rule,
        order_budget=study.order_budget,
        progress=lambda ci, r: log.debug("config %d replicate %d", ci, r),
    )
    rows = []
    for cfg, m in zip(configs, metrics):
        rows.append(
            {
                "dim": cfg.dim,
                "delta": cfg.delta_kind,
                "alpha": cfg.alpha,
                "innovation": cfg.innovation,
                "rho": cfg.rho,
                "k_rule": study.k_rule,
                "replicates": m.replicates,
                "permutations": study.permutations,
                "n_sites": geometry.n,
                "cluster_size": len(cluster),
                "power": m.power,
                "tpr": m.tpr,
                "fpr": m.fpr,
                "ppv": m.ppv,
                "replicates_rejecting": m.replicates_rejecting,
                "mean_detected_size": m.mean_detected_size,
            }
        )
    write_table_csv(Path(out_dir) / "metrics.csv", rows)
    return rows


def cmd_signature(input_path, out_dir, order: int | None = None, budget: int = DEFAULT_MAX_LENGTH, augment: bool = True):
    geometry, samples = read_dataset(input_path, min_sites=1)
    q = samples[0].dim + (1 if augment else 0)
    if order is None:
        order = max_order_for_budget(q, budget)
    sigs = signature_matrix(samples, order, augment=augment, max_length=budget)
    write_signatures_csv(Path(out_dir) / "signatures.csv", geometry.site_ids, sigs, q, order)
    return sigs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        if args.command == "scan":
            cmd_scan(run_config_from_args(args))
        elif args.command == "simulate":
            cmd_simulate(study_from_args(args), args.out_dir)
        else:
            cmd_signature(args.input, args.out_dir, args.order, args.order_budget, args.augment)
    except (DatasetError, ValueError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
