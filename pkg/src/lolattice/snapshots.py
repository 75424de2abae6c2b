"""Lossless CSV persistence for lattice states, norm tables, and manifests.

Snapshot layout: comment lines `# key=value` (version, family, alpha, K,
boundary, optionally residual_inf), then a `i,j,r,theta` header and one row
per cell in row-major cell order. Floats are written with 17 significant
digits so doubles round-trip exactly. Manifests are JSON with sorted keys
and no timestamps; identical configurations produce identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import SnapshotFormatError
from .grid import Boundary, LatticeGrid, PolarField
from .steady import SteadyState

SNAPSHOT_VERSION = 1


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def format_p(p: float) -> str:
    p = float(p)
    return "inf" if math.isinf(p) else f"{p:g}"


def parse_p(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "infinity"):
        return math.inf
    return float(text)


def save_snapshot(state: SteadyState | PolarField, path,
                  family: str | None = None, alpha: float | None = None) -> None:
    """Write a state to CSV. SteadyState carries its own tags; a bare
    PolarField needs `alpha` (and optionally `family`) supplied."""
    if isinstance(state, SteadyState):
        family = state.family if family is None else family
        alpha = state.alpha if alpha is None else alpha
        residual = state.residual_inf
        r, theta = state.r_bar, state.theta_bar
    else:
        if alpha is None:
            raise ValueError("alpha is required when saving a bare field")
        family = "state" if family is None else family
        residual = None
        r, theta = state.r, state.theta
    grid = state.grid
    lo, hi = grid.index_range
    lines = [
        f"# version={SNAPSHOT_VERSION}",
        f"# family={family}",
        f"# alpha={format_float(alpha)}",
        f"# K={grid.half_width}",
        f"# boundary={grid.boundary.value}",
    ]
    if residual is not None and math.isfinite(residual):
        lines.append(f"# residual_inf={format_float(residual)}")
    lines.append("i,j,r,theta")
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            ai, aj = grid.array_pos((i, j))
            lines.append(f"{i},{j},{format_float(r[ai, aj])},{format_float(theta[ai, aj])}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header_comments(lines: list[str]) -> tuple[dict, int]:
    meta: dict[str, str] = {}
    k = 0
    for k, line in enumerate(lines):
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" not in body:
            raise SnapshotFormatError(f"malformed comment {line!r}", line=k + 1)
        key, _, val = body.partition("=")
        meta[key.strip()] = val.strip()
    return meta, k


def load_snapshot(path) -> SteadyState:
    """Read a snapshot back into a SteadyState.

    The stored residual is restored when present, otherwise NaN; callers
    that need a trusted residual must revalidate against model parameters.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise SnapshotFormatError("empty snapshot file", line=1)
    meta, k = _parse_header_comments(lines)
    for key in ("version", "family", "alpha", "K", "boundary"):
        if key not in meta:
            raise SnapshotFormatError(f"missing header comment '{key}'", line=k)
    if meta["version"] != str(SNAPSHOT_VERSION):
        raise SnapshotFormatError(
            f"unsupported snapshot version {meta['version']!r}, expected {SNAPSHOT_VERSION}",
            line=1)
    if k >= len(lines) or lines[k].strip() != "i,j,r,theta":
        raise SnapshotFormatError("expected header 'i,j,r,theta'", line=k + 1)
    try:
        half_width = int(meta["K"])
        alpha = float(meta["alpha"])
        boundary = Boundary(meta["boundary"])
    except ValueError as exc:
        raise SnapshotFormatError(f"bad header value: {exc}", line=k) from None
    grid = LatticeGrid(half_width, boundary)
    n = grid.side
    r = np.full((n, n), np.nan)
    theta = np.full((n, n), np.nan)
    seen = 0
    for ln, line in enumerate(lines[k + 1:], start=k + 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise SnapshotFormatError(f"expected 4 fields, got {len(parts)}", line=ln)
        try:
            i, j = int(parts[0]), int(parts[1])
            rv, tv = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise SnapshotFormatError(f"bad cell row: {exc}", line=ln) from None
        if not grid.contains((i, j)):
            raise SnapshotFormatError(f"cell ({i}, {j}) outside grid K={half_width}",
                                      line=ln)
        ai, aj = grid.array_pos((i, j))
        r[ai, aj] = rv
        theta[ai, aj] = tv
        seen += 1
    if seen != grid.n_cells:
        raise SnapshotFormatError(
            f"snapshot has {seen} cell rows, grid needs {grid.n_cells}",
            line=len(lines))
    residual = float(meta.get("residual_inf", "nan"))
    return SteadyState(grid, r, theta, alpha, residual, meta["family"])


def write_norm_table(path, times, taus, p_values, lp: dict, qp: dict) -> None:
    """CSV with columns t,tau,p,lp,qp; one row per (time, p) pair."""
    times = np.asarray(times, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if times.shape != taus.shape:
        raise ValueError("times and taus must align")
    lines = ["t,tau,p,lp,qp"]
    for k in range(times.size):
        for p in p_values:
            p = float(p)
            lv = lp[p][k]
            qv = qp[p][k] if qp else math.nan
            lines.append(f"{format_float(times[k])},{format_float(taus[k])},"
                         f"{format_p(p)},{format_float(lv)},{format_float(qv)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, (np.floating, np.integer)):
        return _json_safe(float(value))
    return value


def write_manifest(path, command: str, config: dict, version: str) -> None:
    """Resolved run description; byte-stable for identical configurations."""
    doc = {"command": command, "config": _json_safe(config), "tool_version": version}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def manifest_path_for(out_path) -> Path:
    out = Path(out_path)
    return out.with_name(out.name + ".manifest.json")
