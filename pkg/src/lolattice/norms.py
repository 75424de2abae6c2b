"""Sequence norms and first-difference seminorms over lattice truncations.

Two families are measured everywhere in the package: the plain ell^p norm of
a field and the Q_p seminorm built from nearest-neighbour differences,

    Q_p(x)^p = sum over cells of sum over the 4 neighbours |x_nb - x_cell|^p,

with the p = infinity case the sup over cells of the per-cell difference sum.
Q_p vanishes exactly on constants and controls how far a field is from one.

Power sums are accumulated in extended precision (longdouble) so that the
sharp comparison constants (8 against the ell^p norm, 4 for the per-cell
gradient sum) survive to float slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import LatticeGrid


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return p


def _power_sum(values: np.ndarray, p: float):
    # longdouble accumulation; inputs are f64 magnitudes
    return np.sum(np.abs(values) ** p, dtype=np.longdouble)


def lp_norm(x: np.ndarray, p: float) -> float:
    """ell^p norm of a field; sup norm for p = inf."""
    p = _check_p(p)
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty field")
    if math.isinf(p):
        return float(np.max(np.abs(x)))
    return float(_power_sum(x, p) ** (1.0 / np.longdouble(p)))


def _difference_arrays(x: np.ndarray, grid: LatticeGrid) -> list[np.ndarray]:
    return [nb - x for nb in grid.neighbour_values(x)]


def qp_seminorm(x: np.ndarray, grid: LatticeGrid, p: float) -> float:
    """First-difference seminorm Q_p; zero iff the field is constant."""
    p = _check_p(p)
    diffs = _difference_arrays(np.asarray(x, dtype=float), grid)
    if math.isinf(p):
        per_cell = sum(np.abs(d) for d in diffs)
        return float(np.max(per_cell))
    acc = np.longdouble(0.0)
    for d in diffs:
        acc += _power_sum(d, p)
    return float(acc ** (1.0 / np.longdouble(p)))


def neighbour_sum_lp(x: np.ndarray, grid: LatticeGrid, p: float) -> float:
    """ell^p norm of the per-cell sum of absolute neighbour differences.

    Sits below 4 * Q_p(x) for every p; the delta field shows the constant 4
    cannot be improved.
    """
    p = _check_p(p)
    diffs = _difference_arrays(np.asarray(x, dtype=float), grid)
    per_cell = sum(np.abs(d) for d in diffs)
    return lp_norm(per_cell, p)


def boundary_mass_fraction(x: np.ndarray, grid: LatticeGrid, width: int = 5) -> float:
    """Fraction of ell^1 mass within `width` cells of the truncation edge."""
    x = np.asarray(x)
    total = float(np.sum(np.abs(x), dtype=np.longdouble))
    if total == 0.0:
        return 0.0
    band = grid.boundary_band_mask(width)
    return float(np.sum(np.abs(x)[band], dtype=np.longdouble)) / total


@dataclass(frozen=True)
class NormReport:
    """ell^p and Q_p values of one field on a common set of p values."""

    p_values: tuple[float, ...]
    lp: dict[float, float]
    qp: dict[float, float]

    def __post_init__(self):
        ps = tuple(sorted(_check_p(p) for p in self.p_values))
        if len(ps) != len(set(ps)):
            raise ValueError("duplicate p values")
        object.__setattr__(self, "p_values", ps)
        for name, table in (("lp", self.lp), ("qp", self.qp)):
            if set(table) != set(ps):
                raise ValueError(f"{name} keys do not match p_values")
        # p -> lp is non-increasing including the sup norm. The qp chain is
        # only monotone over finite p: Q_inf aggregates per-cell sums, not
        # single differences, and sits above the finite-p tail on sparse
        # fields (delta: Q_2 = sqrt(8) < Q_inf = 4).
        slack = 1e-12
        checks = [(self.lp, "lp", ps), (self.qp, "qp", [p for p in ps if math.isfinite(p)])]
        for table, label, subset in checks:
            vals = [table[p] for p in subset]
            for lo, hi in zip(vals[1:], vals[:-1]):
                if lo > hi * (1 + slack) + slack:
                    raise ValueError(f"{label} values not non-increasing in p")


def norm_report(x: np.ndarray, grid: LatticeGrid, p_values) -> NormReport:
    ps = tuple(float(p) for p in p_values)
    return NormReport(
        p_values=ps,
        lp={float(p): lp_norm(x, p) for p in ps},
        qp={float(p): qp_seminorm(x, grid, p) for p in ps},
    )
