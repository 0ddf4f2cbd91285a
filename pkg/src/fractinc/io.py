"""Serialization: plane families as JSON, point clouds as CSV, grid measures
as CSV (canonical, byte-deterministic) or NPZ (binary convenience).

All writers format floats with repr (shortest round-trip) and fixed key
order, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .geometry import PlaneFamily, PointCloud
from .measures import GridField, GridMeasure


def _fmt(x) -> str:
    return repr(float(x))


def _sanitize(obj):
    """Make numpy scalars/arrays JSON-ready, mapping non-finite to strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return str(v)
        return v
    return obj


def dump_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(obj), sort_keys=True, indent=2) + "\n"
    path.write_text(text)


def save_plane_family(fam: PlaneFamily, path) -> None:
    rec = {
        "d": fam.d,
        "n": fam.n,
        "separation": _sanitize(fam.separation),
        "planes": [
            {"basis": _sanitize(fam.basis[i]), "offset": _sanitize(fam.offset[i])}
            for i in range(len(fam))
        ],
    }
    dump_json(rec, path)


def load_plane_family(path) -> PlaneFamily:
    rec = json.loads(Path(path).read_text())
    basis = np.array([p["basis"] for p in rec["planes"]], dtype=float)
    offset = np.array([p["offset"] for p in rec["planes"]], dtype=float)
    sep = rec.get("separation", 0.0)
    if isinstance(sep, str):
        sep = float(sep)
    return PlaneFamily(d=int(rec["d"]), n=int(rec["n"]), basis=basis,
                       offset=offset, separation=sep)


def save_point_cloud(cloud: PointCloud, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# point-cloud d={cloud.d} separation={_fmt(cloud.separation)} "
             f"bounding_radius={_fmt(cloud.bounding_radius) if np.isfinite(cloud.bounding_radius) else 'inf'}"]
    for p in cloud.points:
        lines.append(",".join(_fmt(x) for x in p))
    path.write_text("\n".join(lines) + "\n")


def load_point_cloud(path) -> PointCloud:
    meta = {"d": None, "separation": 0.0, "bounding_radius": np.inf}
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    if key in meta:
                        meta[key] = float(val) if val != "inf" else np.inf
            continue
        rows.append([float(x) for x in line.split(",")])
    pts = np.array(rows, dtype=float)
    d = int(meta["d"]) if meta["d"] else pts.shape[1]
    return PointCloud(d=d, points=pts, separation=float(meta["separation"]),
                      bounding_radius=meta["bounding_radius"])


def save_grid_measure(mu: GridField, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".npz":
        np.savez(path, d=mu.d, h=mu.h, origin=mu.origin, values=mu.values)
        return
    shape = ",".join(str(s) for s in mu.values.shape)
    origin = ",".join(_fmt(x) for x in mu.origin)
    lines = [f"# grid-measure d={mu.d} h={_fmt(mu.h)} origin={origin} shape={shape}"]
    flat = mu.values.reshape(mu.values.shape[0], -1) if mu.d > 1 else mu.values[None, :]
    for row in flat:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def load_grid_measure(path):
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            d, h = int(z["d"]), float(z["h"])
            origin, values = z["origin"], z["values"]
    else:
        header = None
        rows = []
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = line[1:]
                continue
            rows.append([float(x) for x in line.split(",")])
        if header is None:
            raise ValueError("grid measure CSV is missing its header line")
        meta = {}
        for tok in header.split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
        d = int(meta["d"])
        h = float(meta["h"])
        origin = np.array([float(x) for x in meta["origin"].split(",")])
        shape = tuple(int(x) for x in meta["shape"].split(","))
        values = np.array(rows, dtype=float).reshape(shape)
    if np.min(values) >= 0:
        return GridMeasure(d=d, h=h, origin=origin, values=values)
    return GridField(d=d, h=h, origin=origin, values=values)


def save_csv(path, columns, rows) -> None:
    """rows: iterable of dicts keyed by the column names."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            if isinstance(v, (float, np.floating)):
                cells.append(_fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def set_threads_env(n: int) -> None:
    """Also hint BLAS layers, for timing stability (results never depend on it)."""
    if n > 0:
        os.environ.setdefault("OMP_NUM_THREADS", str(n))
