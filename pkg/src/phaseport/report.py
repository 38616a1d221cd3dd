"""Canonical JSON reports for the command-line tools."""

from __future__ import annotations

import hashlib
import json

from . import __version__
from .corpus import ModelRecord, serialize_model
from .phase1d import Model1D, build_phase_line
from .phase2d import (
    Model2D, NullClineSet, classify_equilibrium_2d, extract_nullclines,
    find_equilibria_2d,
)

__all__ = ["input_digest", "analysis_report", "phaseline_report", "to_canonical_json"]


def to_canonical_json(obj) -> str:
    """Stable byte representation: sorted keys, repr floats, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def input_digest(record: ModelRecord, raw_bytes: bytes | None = None) -> str:
    """SHA-256 of the model file bytes, or of the canonical serialization."""
    payload = raw_bytes if raw_bytes is not None else serialize_model(record).encode()
    return hashlib.sha256(payload).hexdigest()


def _bbox(polylines) -> list[float] | None:
    points = [p for line in polylines for p in line.points]
    if not points:
        return None
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return [min(xs), min(ys), max(xs), max(ys)]


def _nullcline_summary(ncs: NullClineSet) -> dict:
    return {
        "x_clines": {"count": len(ncs.x_clines()), "bbox": _bbox(ncs.x_clines())},
        "y_clines": {"count": len(ncs.y_clines()), "bbox": _bbox(ncs.y_clines())},
    }


def analysis_report(record: ModelRecord, grid: int = 64, scan: dict | None = None,
                    raw_bytes: bytes | None = None) -> dict:
    """Full 2D analysis as a JSON-ready dict (equilibria sorted by location)."""
    m = record.model
    if not isinstance(m, Model2D):
        raise TypeError("analysis reports cover 2D models; use the phase-line report for 1D")
    equilibria = []
    for loc in find_equilibria_2d(m, grid):
        rep = classify_equilibrium_2d(m, loc)
        z1, z2 = rep.eigen.values.as_complex_pair()
        equilibria.append({
            "x": rep.x,
            "y": rep.y,
            "jacobian": [[rep.jacobian.a, rep.jacobian.b], [rep.jacobian.c, rep.jacobian.d]],
            "det": rep.det,
            "tr": rep.tr,
            "discriminant": rep.discriminant,
            "eigenvalues": [{"re": z1.re, "im": z1.im}, {"re": z2.re, "im": z2.im}],
            "class": str(rep.classification),
        })
    out = {
        "model": record.name,
        "equilibria": equilibria,
        "nullclines": _nullcline_summary(extract_nullclines(m, grid)),
        "version": __version__,
        "input_sha256": input_digest(record, raw_bytes),
    }
    if scan is not None:
        out["scan"] = scan
    return out


def phaseline_report(record: ModelRecord, raw_bytes: bytes | None = None) -> dict:
    """1D phase-line summary as a JSON-ready dict."""
    m = record.model
    if not isinstance(m, Model1D):
        raise TypeError("phase-line reports cover 1D models")
    line = build_phase_line(m)
    return {
        "model": record.name,
        "equilibria": [
            {"x": e.x, "fprime": e.fprime, "stability": str(e.stability)}
            for e in line.equilibria
        ],
        "arrows": [
            {"from": a, "to": b, "direction": "right" if d > 0 else "left"}
            for (a, b), d in line.arrows
        ],
        "basins": [
            {"attractor": attractor, "from": iv[0], "to": iv[1]}
            for attractor, iv in line.basins
        ],
        "escapes": [
            {"side": side, "from": iv[0], "to": iv[1]} for side, iv in line.escapes
        ],
        "version": __version__,
        "input_sha256": input_digest(record, raw_bytes),
    }
