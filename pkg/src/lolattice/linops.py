"""Coupling operators linearized at steady profiles, their semigroups, and
decay-rate measurement.

An operator here is a weighted nearest-neighbour difference stencil

    (L x)_c = sum over directions w_d(c) * (x_nb(d, c) - x_c),

with three weight choices: unit or axis-dependent constants (the plain
discrete Laplacian), the cosine of the steady phase differences, and that
cosine times the steady amplitude ratio. Constants are in the kernel for all
three. The semigroup e^{tL} is computed by fixed-step RK4 and probed with
ell^p norms and the Q_p difference seminorms, whose time decay is fitted as a
power of (1 + t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError
from .grid import Boundary, LatticeGrid
from .integrate import integrate_fixed
from .norms import boundary_mass_fraction, lp_norm, qp_seminorm

KIND_PLAIN = "plain"
KIND_COSINE = "cosine"
KIND_RATIO_COSINE = "ratio_cosine"


@dataclass(frozen=True)
class CouplingOperator:
    """Nearest-neighbour difference stencil with per-direction weight fields."""

    grid: LatticeGrid
    weights: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.grid.side
        if len(self.weights) != 4:
            raise ValueError("need one weight field per direction")
        ws = []
        for w in self.weights:
            w = np.asarray(w, dtype=float)
            if w.shape != (n, n):
                raise ValueError(f"weight shape {w.shape} does not match grid")
            if not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite")
            ws.append(w)
        object.__setattr__(self, "weights", tuple(ws))

    @property
    def max_weight(self) -> float:
        return float(max(np.max(np.abs(w)) for w in self.weights))

    @property
    def norm_bound(self) -> float:
        """sup-norm bound 8 * max|w| (four neighbours, two terms each)."""
        return 8.0 * self.max_weight

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for w, nb in zip(self.weights, self.grid.neighbour_values(x)):
            out += w * (nb - x)
        return out

    __call__ = apply


def _zero_self_edges(grid: LatticeGrid, weights: list[np.ndarray]) -> list[np.ndarray]:
    if grid.boundary is Boundary.NEUMANN:
        n = grid.side
        edges = ((0, np.s_[-1, :]), (1, np.s_[0, :]), (2, np.s_[:, -1]), (3, np.s_[:, 0]))
        for d, sl in edges:
            weights[d] = weights[d].copy()
            weights[d][sl] = 0.0
    return weights


def plain_laplacian(grid: LatticeGrid, d1: float = 1.0, d2: float = 1.0) -> CouplingOperator:
    """Discrete Laplacian with weight d1 on i-neighbours and d2 on j-neighbours."""
    if not (np.isfinite(d1) and np.isfinite(d2)):
        raise ValueError("weights must be finite")
    n = grid.side
    ws = [np.full((n, n), v) for v in (d1, d1, d2, d2)]
    ws = _zero_self_edges(grid, ws)
    return CouplingOperator(grid, tuple(ws), KIND_PLAIN, {"d1": float(d1), "d2": float(d2)})


def build_operator(steady, kind: str) -> CouplingOperator:
    """Linearized coupling operator at a steady profile.

    "cosine" weights each difference by cos of the steady phase gap;
    "ratio_cosine" additionally multiplies by the neighbour/cell amplitude
    ratio. At the trivial profile both reduce to the unit-weight Laplacian.
    """
    grid = steady.grid
    theta = steady.theta_bar
    ws = []
    if kind == KIND_COSINE:
        for nb in grid.neighbour_values(theta):
            ws.append(np.cos(nb - theta))
    elif kind == KIND_RATIO_COSINE:
        r = steady.r_bar
        r_nbs = grid.neighbour_values(r)
        t_nbs = grid.neighbour_values(theta)
        for rn, tn in zip(r_nbs, t_nbs):
            ws.append((rn / r) * np.cos(tn - theta))
    elif kind == KIND_PLAIN:
        return plain_laplacian(grid)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    ws = _zero_self_edges(grid, ws)
    return CouplingOperator(grid, tuple(ws), kind, {"family": steady.family})


def default_dt(op: CouplingOperator) -> float:
    """Conservative RK4 step for the stencil's stability bound."""
    mw = op.max_weight
    if mw == 0.0:
        return 0.1
    return 0.1 / (8.0 * mw)


def evolve_semigroup(op: CouplingOperator, x0: np.ndarray, times, dt: float | None = None
                     ) -> list[np.ndarray]:
    """States e^{tL} x0 at the given increasing times (t = 0 allowed first)."""
    x0 = np.asarray(x0, dtype=float)
    if dt is None:
        dt = default_dt(op)
    times = [float(t) for t in times]
    if times and times[0] == 0.0:
        rest = integrate_fixed(op.apply, x0, times[1:], dt) if len(times) > 1 else []
        return [x0.copy()] + rest
    return integrate_fixed(op.apply, x0, times, dt)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay fit in transformed coordinates.

    For model "power" the fit is log v against log(1 + t) and `rate` is the
    power of (1 + t); for "exp" it is log v against t and `rate` is the
    e-folding rate. Positive `rate` means decay. r_squared is computed in the
    transformed coordinates and defined as 1.0 when the residual scatter is
    below 1e-6 there (a flat or perfectly explained series).
    """

    model: str
    rate: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float
    n_samples: int


def fit_decay(times, values, model: str, window: tuple[float, float] | None = None
              ) -> DecayFit:
    """Fit a decay law to a sampled positive series over a time window.

    The default window is [t_max/20, t_max/2]. Requires at least 8 samples
    inside the window and strictly positive values there.
    """
    if model not in ("power", "exp"):
        raise ValueError(f"unknown fit model {model!r}")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise FitError("times and values must be matched 1-d arrays")
    if window is None:
        tmax = float(t.max())
        window = (tmax / 20.0, tmax / 2.0)
    lo, hi = float(window[0]), float(window[1])
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    t, v = t[sel], v[sel]
    if t.size < 8:
        raise FitError(f"only {t.size} samples in window [{lo:.3g}, {hi:.3g}]; need 8")
    if np.any(v <= 0.0):
        bad = float(t[v <= 0.0][0])
        raise FitError(f"nonpositive value at t = {bad:.6g} inside the fit window")
    x = np.log1p(t) if model == "power" else t
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    if math.sqrt(ss_res / t.size) < 1e-6:
        r2 = 1.0
    elif ss_tot == 0.0:
        r2 = 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return DecayFit(model=model, rate=float(-slope), prefactor=float(np.exp(intercept)),
                    window=(lo, hi), r_squared=float(r2), n_samples=int(t.size))


@dataclass(frozen=True)
class DecayTable:
    """Norm samples of a semigroup orbit, with boundary-contamination flags."""

    times: np.ndarray
    p_values: tuple[float, ...]
    lp: dict[float, np.ndarray]
    qp: dict[float, np.ndarray]
    boundary_mass: np.ndarray
    flagged: np.ndarray

    def series(self, kind: str, p: float, drop_flagged: bool = True
               ) -> tuple[np.ndarray, np.ndarray]:
        table = {"lp": self.lp, "qp": self.qp}[kind]
        vals = table[float(p)]
        if drop_flagged and self.flagged.any():
            keep = ~self.flagged
            return self.times[keep], vals[keep]
        return self.times, vals

    def fit(self, kind: str, p: float, model: str = "power",
            window: tuple[float, float] | None = None) -> DecayFit:
        t, v = self.series(kind, p)
        return fit_decay(t, v, model, window)


def measure_decay_suite(op: CouplingOperator, x0: np.ndarray, p_list, t_grid,
                        dt: float | None = None, band_width: int = 5,
                        mass_threshold: float = 0.01) -> DecayTable:
    """Evolve x0 under the semigroup and tabulate norms at the sample times.

    Samples whose ell^1 mass within `band_width` cells of a Neumann edge
    exceeds `mass_threshold` are flagged; fits exclude them by default.
    """
    ps = tuple(float(p) for p in p_list)
    states = evolve_semigroup(op, x0, t_grid, dt=dt)
    times = np.asarray([float(t) for t in t_grid])
    lp: dict[float, list[float]] = {p: [] for p in ps}
    qp: dict[float, list[float]] = {p: [] for p in ps}
    bmass = []
    for x in states:
        for p in ps:
            lp[p].append(lp_norm(x, p))
            qp[p].append(qp_seminorm(x, op.grid, p))
        bmass.append(boundary_mass_fraction(x, op.grid, band_width))
    bmass = np.asarray(bmass)
    return DecayTable(
        times=times,
        p_values=ps,
        lp={p: np.asarray(v) for p, v in lp.items()},
        qp={p: np.asarray(v) for p, v in qp.items()},
        boundary_mass=bmass,
        flagged=bmass > mass_threshold,
    )


@dataclass(frozen=True)
class CouplingGraph:
    """Sign census of the steady interaction graph.

    Edge weights are cos of the steady phase gap across each undirected
    nearest-neighbour pair; `zero_edges` lists pairs within `zero_tol` of
    zero as cell-coordinate tuples.
    """

    n_edges: int
    n_positive: int
    n_zero: int
    n_negative: int
    zero_tol: float
    zero_edges: tuple

    @property
    def centre_ring_only(self) -> bool:
        """True when the zero edges are exactly the four centre-cell bonds
        and every other edge is positive."""
        ring = {
            frozenset({(0, 0), (0, 1)}), frozenset({(0, 1), (1, 1)}),
            frozenset({(1, 1), (1, 0)}), frozenset({(1, 0), (0, 0)}),
        }
        found = {frozenset(e) for e in self.zero_edges}
        return found == ring and self.n_negative == 0


def coupling_graph(steady, zero_tol: float = 1e-6) -> CouplingGraph:
    grid = steady.grid
    theta = steady.theta_bar
    n = grid.side
    lo, _ = grid.index_range
    weights = []
    pairs = []
    for axis in (0, 1):
        wrap = grid.boundary is Boundary.PERIODIC
        count = n if wrap else n - 1
        for k in range(count):
            k2 = (k + 1) % n
            if axis == 0:
                w = np.cos(theta[k2, :] - theta[k, :])
                cells = [((k + lo, m + lo), (k2 + lo, m + lo)) for m in range(n)]
            else:
                w = np.cos(theta[:, k2] - theta[:, k])
                cells = [((m + lo, k + lo), (m + lo, k2 + lo)) for m in range(n)]
            weights.append(w)
            pairs.extend(cells)
    w = np.concatenate(weights)
    zero = np.abs(w) <= zero_tol
    pos = w > zero_tol
    neg = w < -zero_tol
    zero_edges = tuple(pairs[k] for k in np.nonzero(zero)[0])
    return CouplingGraph(
        n_edges=int(w.size),
        n_positive=int(pos.sum()),
        n_zero=int(zero.sum()),
        n_negative=int(neg.sum()),
        zero_tol=float(zero_tol),
        zero_edges=zero_edges,
    )
