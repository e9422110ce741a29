"""JSON/CSV emission, schema-tagged loading, gnuplot scripts and run manifests."""

from __future__ import annotations

import csv
import hashlib
import os
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np
import orjson

from .errors import ScenarioError
from .geometry import StarCurve

_JSON_OPTS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS


def _default(obj: Any) -> Any:
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return np.stack([obj.real, obj.imag], axis=-1).tolist()
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating, np.bool_)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> bytes:
    return orjson.dumps(obj, default=_default, option=_JSON_OPTS)


def write_json(path: str, obj: Any) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as f:
        f.write(dumps(obj))
    return path


def read_json(path: str, schema: Optional[str] = None) -> Dict[str, Any]:
    with open(path, "rb") as f:
        rec = orjson.loads(f.read())
    if schema and rec.get("schema") != schema:
        raise ScenarioError(f"{path}: expected schema {schema}, found {rec.get('schema')!r}")
    return rec


def iter_reports(root: str, schema: str, name: str = "report.json") -> Iterator[Dict[str, Any]]:
    """Every report below root carrying the given schema tag; others are skipped."""
    for dirpath, _, files in sorted(os.walk(root)):
        if name not in files:
            continue
        try:
            rec = read_json(os.path.join(dirpath, name))
        except (OSError, orjson.JSONDecodeError):
            continue
        if rec.get("schema") == schema:
            yield rec


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def read_csv(path: str) -> List[Dict[str, Any]]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            rec = {}
            for k, v in row.items():
                try:
                    rec[k] = float(v)
                except (TypeError, ValueError):
                    rec[k] = v
            out.append(rec)
    return out


def write_curves_csv(path: str, curves: Sequence[StarCurve], samples: int = 256) -> str:
    """Closed polylines (first point repeated), columns curve,t,x,y,r,theta for polar plots."""
    rows = []
    t = np.linspace(0.0, 2.0 * np.pi, samples + 1)
    for i, c in enumerate(curves):
        q = c.points(t)
        for tk, (x, y) in zip(t, q):
            rows.append((i, float(tk), float(x), float(y), float(np.hypot(x, y)), float(np.arctan2(y, x))))
    return write_csv(path, ("curve", "t", "x", "y", "r", "theta"), rows)


def write_measure_csv(path: str, points: np.ndarray, weights: np.ndarray) -> str:
    rows = [(float(p[0]), float(p[1]), float(w.real), float(w.imag)) for p, w in zip(points, weights)]
    return write_csv(path, ("x", "y", "re_lambda", "im_lambda"), rows)


def write_gnuplot(path: str, panels: Sequence[Dict[str, str]], domain_radius: float = 1.0) -> str:
    """One polar panel per pipeline stage; each panel has title, curves (csv) and optional points (csv)."""
    lines = [
        "# usage: gnuplot -p " + os.path.basename(path),
        "set datafile separator ','",
        "set size ratio -1",
        f"set xrange [-{domain_radius * 1.05}:{domain_radius * 1.05}]",
        f"set yrange [-{domain_radius * 1.05}:{domain_radius * 1.05}]",
        "set key off",
        "set parametric",
        "set trange [0:2*pi]",
        f"set multiplot layout 1,{max(1, len(panels))}",
    ]
    for p in panels:
        plots = [f"{domain_radius}*cos(t),{domain_radius}*sin(t) lc rgb 'gray'"]
        if p.get("phantom"):
            plots.append(f"'{p['phantom']}' skip 1 using 3:4 with lines lc rgb 'black' dt 2")
        if p.get("curves"):
            plots.append(f"'{p['curves']}' skip 1 using 3:4 with lines lw 2")
        if p.get("points"):
            plots.append(f"'{p['points']}' skip 1 using 1:2 with points pt 7")
        lines.append(f"set title '{p.get('title', '')}'")
        lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("unset multiplot")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path


def sha256_of(doc: Any) -> str:
    return hashlib.sha256(orjson.dumps(doc, default=_default, option=orjson.OPT_SORT_KEYS)).hexdigest()


def write_manifest(out_dir: str, cfg: Dict[str, Any], files: Sequence[str], extra: Optional[Dict[str, Any]] = None) -> str:
    man = {
        "schema": "manifest.v1",
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "provenance_sha256": sha256_of(cfg),
        "parameters": cfg,
        "files": sorted(os.path.relpath(p, out_dir) for p in files),
    }
    man.update(extra or {})
    return write_json(os.path.join(out_dir, "manifest.json"), man)


def status_line(obj: Any) -> str:
    """Single-line JSON for worker and CLI status output."""
    return orjson.dumps(obj, default=_default, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS).decode()
