"""Readers and writers for datasets, reports and tables.

Every writer has a matching reader so emitted files can be loaded back.
Files are written atomically: to a temporary file in the target directory,
then renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .scan import SiteGeometry
from .signature import FunctionalSample, word_labels

MIN_SITES = 4


class DatasetError(ValueError):
    """Malformed dataset file; the message names the offending line or field."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _float(value: str, line: int, column: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise DatasetError(f"line {line}: column {column!r} is not a number: {value!r}") from None
    if not math.isfinite(out):
        raise DatasetError(f"line {line}: column {column!r} is not finite: {value!r}")
    return out


def read_dataset(path, min_sites: int = MIN_SITES) -> tuple[SiteGeometry, list[FunctionalSample]]:
    """Load a long-format CSV: ``site_id, x, y, t, v1[, v2, ...]``.

    Sites are kept in order of first appearance.  Rows of one site may come
    in any time order; they are sorted by ``t``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError("empty dataset file") from None
        fixed = ["site_id", "x", "y", "t"]
        if header[:4] != fixed:
            raise DatasetError(f"line 1: header must start with {','.join(fixed)}, got {','.join(header[:4])}")
        vcols = header[4:]
        if not vcols or vcols != [f"v{j}" for j in range(1, len(vcols) + 1)]:
            raise DatasetError("line 1: value columns must be v1, v2, ..., vp")

        sites: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise DatasetError(f"line {lineno}: empty site_id")
            x, y, t = (_float(row[j], lineno, fixed[j]) for j in (1, 2, 3))
            values = [_float(row[4 + j], lineno, vcols[j]) for j in range(len(vcols))]
            site = sites.setdefault(sid, {"xy": (x, y), "line": lineno, "obs": {}})
            if site["xy"] != (x, y):
                raise DatasetError(f"line {lineno}: site {sid!r} changes coordinates")
            if t in site["obs"]:
                raise DatasetError(f"line {lineno}: duplicate (site, time) row ({sid}, {row[3].strip()})")
            site["obs"][t] = values

    if not sites:
        raise DatasetError("dataset has no observations")
    if len(sites) < min_sites:
        raise DatasetError(f"too few sites: {len(sites)} < {min_sites}")
    coords = {}
    for sid, site in sites.items():
        if site["xy"] in coords:
            raise DatasetError(
                f"line {site['line']}: site {sid!r} duplicates the coordinates of site {coords[site['xy']]!r}"
            )
        coords[site["xy"]] = sid

    samples = []
    for sid, site in sites.items():
        times = sorted(site["obs"])
        if len(times) < 2:
            raise DatasetError(f"site {sid!r}: needs at least 2 observation times")
        samples.append(FunctionalSample(sid, np.array(times), np.array([site["obs"][t] for t in times])))
    geometry = SiteGeometry(np.array([s["xy"] for s in sites.values()]), tuple(sites))
    return geometry, samples


def write_dataset(path, geometry: SiteGeometry, samples: Sequence[FunctionalSample]) -> None:
    p = samples[0].dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["site_id", "x", "y", "t"] + [f"v{j}" for j in range(1, p + 1)])
    for (x, y), s in zip(geometry.coordinates, samples):
        for t, v in zip(s.times, s.values):
            w.writerow([s.site_id, repr(float(x)), repr(float(y)), repr(float(t))] + [repr(float(a)) for a in v])
    atomic_write(path, buf.getvalue())


def read_sites(path) -> tuple[SiteGeometry, tuple[int, ...]]:
    """Site table ``site_id, x, y[, cluster]``; returns the geometry and the
    indices of rows whose ``cluster`` column is truthy."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DatasetError("site file is empty")
    for col in ("site_id", "x", "y"):
        if col not in rows[0]:
            raise DatasetError(f"site file lacks column {col!r}")
    coords = np.array([[_float(r["x"], i + 2, "x"), _float(r["y"], i + 2, "y")] for i, r in enumerate(rows)])
    cluster = tuple(
        i for i, r in enumerate(rows) if str(r.get("cluster", "")).strip().lower() in {"1", "true", "yes"}
    )
    return SiteGeometry(coords, tuple(r["site_id"] for r in rows)), cluster


def write_sites(path, geometry: SiteGeometry, cluster: Sequence[int] = ()) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["site_id", "x", "y", "cluster"])
    members = set(cluster)
    for i, (sid, (x, y)) in enumerate(zip(geometry.site_ids, geometry.coordinates)):
        w.writerow([sid, repr(float(x)), repr(float(y)), int(i in members)])
    atomic_write(path, buf.getvalue())


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, dumps_json(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def clusters_geojson(geometry: SiteGeometry, clusters: Sequence[dict]) -> dict:
    """One MultiPoint feature per reported cluster, at the input coordinates.

    Each entry of ``clusters`` carries ``members`` (site positions) plus any
    properties to copy onto the feature.
    """
    features = []
    for rank, cluster in enumerate(clusters):
        members = list(cluster["members"])
        props = {k: v for k, v in cluster.items() if k != "members"}
        props["rank"] = rank
        props["sites"] = [geometry.site_ids[i] for i in members]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "MultiPoint",
                    "coordinates": [[float(a) for a in geometry.coordinates[i]] for i in members],
                },
                "properties": props,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def read_geojson_clusters(path) -> list[dict]:
    """Feature properties of a cluster GeoJSON, with coordinates attached."""
    doc = read_json(path)
    if doc.get("type") != "FeatureCollection":
        raise DatasetError("not a GeoJSON FeatureCollection")
    out = []
    for feat in doc["features"]:
        props = dict(feat["properties"])
        props["coordinates"] = feat["geometry"]["coordinates"]
        out.append(props)
    return out


def _table_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_signatures_csv(path, site_ids, sigs: np.ndarray, path_dim: int, order: int) -> None:
    labels = word_labels(path_dim, order)
    if sigs.shape[1] != len(labels):
        raise ValueError("signature width does not match path_dim/order")
    rows = [[sid] + [repr(float(v)) for v in row] for sid, row in zip(site_ids, sigs)]
    atomic_write(path, _table_text(["site_id"] + labels, rows))


def read_signatures_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Returns ``(site_ids, word labels, coefficient matrix)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return [r[0] for r in body], header[1:], np.array([[float(v) for v in r[1:]] for r in body])


def write_windows_csv(path, geometry: SiteGeometry, result) -> None:
    rows = []
    for pos, w in enumerate(result.windows):
        p = "" if result.p_values is None else repr(float(result.p_values[pos]))
        rows.append(
            [pos, geometry.site_ids[w.center], repr(w.radius), w.size, repr(float(result.indices[pos])), p,
             " ".join(str(geometry.site_ids[i]) for i in w.members)]
        )
    atomic_write(path, _table_text(["rank", "center", "radius", "size", "index", "p_value", "sites"], rows))


def read_windows_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append(
            {
                "rank": int(r["rank"]),
                "center": r["center"],
                "radius": float(r["radius"]),
                "size": int(r["size"]),
                "index": float(r["index"]),
                "p_value": float(r["p_value"]) if r["p_value"] else None,
                "sites": r["sites"].split(" ") if r["sites"] else [],
            }
        )
    return out


def write_table_csv(path, rows: Sequence[dict]) -> None:
    if not rows:
        raise ValueError("empty table")
    header = list(rows[0])
    body = [["" if r[h] is None else (repr(r[h]) if isinstance(r[h], float) else r[h]) for h in header] for r in rows]
    atomic_write(path, _table_text(header, body))


def read_table_csv(path) -> list[dict]:
    """Rows as dicts; numeric-looking cells are converted to float."""
    def conv(v: str):
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: conv(v) for k, v in r.items()} for r in csv.DictReader(fh)]
