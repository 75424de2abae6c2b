"""Steady profiles of the co-rotating lattice dynamics and their solvers.

Four families are constructed here:

* trivial: every cell at the background amplitude with a common phase;
* doubly periodic: phases winding linearly in both lattice directions with a
  uniform amplitude solved from a scalar balance;
* traveling: the same construction winding in one direction only;
* rotating: a core defect with quarter-spaced phases around the four centre
  cells, obtained numerically by relaxation plus a gauge-pinned Newton solve.

Amplitude/phase profiles are stored as (N, N) arrays; `residual_inf` is the
sup norm of the co-rotating vector field at the profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConstructionError, ConvergenceError
from .grid import Boundary, LatticeGrid, PolarField
from .integrate import integrate_fixed
from .model import ModelParams, rhs_complex_arrays, rhs_polar_arrays

FAMILY_TRIVIAL = "trivial"
FAMILY_DOUBLY_PERIODIC = "doubly_periodic"
FAMILY_TRAVELING = "traveling_wave"
FAMILY_ROTATING = "rotating_wave"
FAMILY_LOADED = "loaded"

GAUGE_CELL = (1, 1)


def wrap_angle(x):
    """Map angles into [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class SteadyState:
    grid: LatticeGrid
    r_bar: np.ndarray
    theta_bar: np.ndarray
    alpha: float
    residual_inf: float
    family: str
    family_params: dict = field(default_factory=dict, compare=False)
    residual_interior_inf: float | None = None
    boundary_flagged: bool = False

    def __post_init__(self):
        n = self.grid.side
        for name in ("r_bar", "theta_bar"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape == (n * n,):
                arr = arr.reshape(n, n)
            if arr.shape != (n, n):
                raise ConstructionError(f"{name} shape {arr.shape} does not match grid")
            if not np.all(np.isfinite(arr)):
                raise ConstructionError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        if np.any(self.r_bar < 0):
            raise ConstructionError("r_bar must be nonnegative")

    def as_polar(self) -> PolarField:
        return PolarField(self.grid, self.r_bar, self.theta_bar)


def residual_parts(r: np.ndarray, theta: np.ndarray, params: ModelParams
                   ) -> tuple[np.ndarray, np.ndarray]:
    """(dr/dt, dtheta/dt) of the co-rotating dynamics at a candidate profile."""
    return rhs_polar_arrays(r, theta, params)


def residual_inf_of(r: np.ndarray, theta: np.ndarray, params: ModelParams) -> float:
    rdot, thdot = residual_parts(r, theta, params)
    return float(max(np.max(np.abs(rdot)), np.max(np.abs(thdot))))


def make_trivial(params: ModelParams) -> SteadyState:
    """Uniform profile at the background amplitude; residual is zero to rounding."""
    n = params.grid.side
    a = params.lam.a
    r = np.full((n, n), a)
    theta = np.zeros((n, n))
    res = residual_inf_of(r, theta, params)
    return SteadyState(params.grid, r, theta, params.alpha, res, FAMILY_TRIVIAL)


def solve_uniform_amplitude(lam, target: float, tol: float = 1e-13) -> float:
    """Solve lam(r) = target by bisection on the bracket (a/2, 3a/2).

    `target` is the uniform coupling deficit alpha * c >= 0 seen by every
    cell of a phase-winding profile. Fails if the bracket does not straddle
    the root, which happens when the coupling is too strong.
    """
    a = lam.a
    lo, hi = 0.5 * a, 1.5 * a
    flo = float(lam.value(lo)) - target
    fhi = float(lam.value(hi)) - target
    if not (flo > 0.0 > fhi):
        raise ConstructionError(
            f"lam(r) = {target:.6g} has no root in ({lo:.3g}, {hi:.3g}); coupling too strong"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if float(lam.value(mid)) - target > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _winding_phase(grid: LatticeGrid, n_i: int, n_j: int) -> np.ndarray:
    ii, jj = grid.coord_arrays()
    out = np.zeros(ii.shape)
    if n_i:
        out = out + 2.0 * np.pi * np.mod(ii, n_i) / n_i
    if n_j:
        out = out + 2.0 * np.pi * np.mod(jj, n_j) / n_j
    return out


def _check_winding(grid: LatticeGrid, n: int, label: str) -> None:
    if n < 5:
        raise ConstructionError(f"{label} must be at least 5, got {n}")
    if grid.boundary is Boundary.PERIODIC and grid.side % n != 0:
        raise ConstructionError(
            f"{label} = {n} must divide the side {grid.side} on a periodic grid"
        )


def make_doubly_periodic(params: ModelParams, n_i: int, n_j: int) -> SteadyState:
    """Phases winding in both directions, uniform amplitude from the scalar balance.

    On a periodic grid the residual is at rounding level; on a Neumann grid
    the edge cells see a nonzero residual, which is flagged and reported
    separately from the interior.
    """
    _check_winding(params.grid, n_i, "n_i")
    _check_winding(params.grid, n_j, "n_j")
    c = 4.0 - 2.0 * math.cos(2.0 * math.pi / n_i) - 2.0 * math.cos(2.0 * math.pi / n_j)
    r_val = solve_uniform_amplitude(params.lam, params.alpha * c)
    theta = _winding_phase(params.grid, n_i, n_j)
    r = np.full(theta.shape, r_val)
    return _finish_winding_state(
        params, r, theta, FAMILY_DOUBLY_PERIODIC,
        {"n_i": n_i, "n_j": n_j, "r_uniform": r_val},
    )


def make_traveling_wave(params: ModelParams, n_i: int) -> SteadyState:
    """Phases winding in one lattice direction; uniform amplitude."""
    _check_winding(params.grid, n_i, "n_i")
    c = 2.0 - 2.0 * math.cos(2.0 * math.pi / n_i)
    r_val = solve_uniform_amplitude(params.lam, params.alpha * c)
    theta = _winding_phase(params.grid, n_i, 0)
    r = np.full(theta.shape, r_val)
    return _finish_winding_state(
        params, r, theta, FAMILY_TRAVELING, {"n_i": n_i, "r_uniform": r_val},
    )


def _finish_winding_state(params, r, theta, family, fparams) -> SteadyState:
    rdot, thdot = residual_parts(r, theta, params)
    res = float(max(np.max(np.abs(rdot)), np.max(np.abs(thdot))))
    interior = None
    flagged = False
    if params.grid.boundary is Boundary.NEUMANN:
        mask = params.grid.interior_mask()
        interior = float(max(np.max(np.abs(rdot[mask])), np.max(np.abs(thdot[mask]))))
        flagged = True
    return SteadyState(params.grid, r, theta, params.alpha, res, family,
                       family_params=fparams,
                       residual_interior_inf=interior, boundary_flagged=flagged)


def default_rotating_seed(grid: LatticeGrid, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Background amplitude with phases circling the grid centre once."""
    ii, jj = grid.coord_arrays()
    theta = np.arctan2(jj - 0.5, ii - 0.5)
    r = np.full(theta.shape, a)
    return r, theta


def _gauge_shift(theta: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    a, b = grid.array_pos(GAUGE_CELL)
    out = wrap_angle(theta - theta[a, b])
    out[a, b] = 0.0
    return out


def _newton_residual(r: np.ndarray, theta: np.ndarray, params: ModelParams,
                     gauge_flat: int) -> tuple[np.ndarray, float]:
    """Stacked (radial, phase) residual with the gauge entry pinned to theta_g."""
    from .model import coupling_sums

    cos_sum, sin_sum = coupling_sums(r, theta, params.grid)
    rdot = params.alpha * (cos_sum - 4.0 * r) + r * params.lam.value(r)
    g_res = sin_sum / r
    if not params.omega.omega1_is_zero:
        g_res = g_res + params.omega.omega1_at(r, params.alpha)
    res = float(max(np.max(np.abs(rdot)), np.max(np.abs(g_res))))
    rhs = np.concatenate([rdot.ravel(), g_res.ravel()])
    rhs[r.size + gauge_flat] = theta.ravel()[gauge_flat]
    return rhs, res


def _assemble_newton_system(r: np.ndarray, theta: np.ndarray, params: ModelParams,
                            nbidx: np.ndarray, gauge_flat: int):
    """Sparse Jacobian of (radial residual, phase residual G) with the G row at
    the gauge cell replaced by the pin theta_g = 0, plus the matching RHS."""
    n = r.size
    rf = r.ravel()
    tf = theta.ravel()
    alpha = params.alpha
    lam = params.lam

    rows, cols, vals = [], [], []
    cells = np.arange(n)
    cos_acc = np.zeros(n)
    sin_acc = np.zeros(n)
    dgg_diag = np.zeros(n)
    dgr_diag = np.zeros(n)
    for d in range(4):
        nb = nbidx[d]
        delta = tf[nb] - tf
        cd = np.cos(delta)
        sd = np.sin(delta)
        rn = rf[nb]
        cos_acc += rn * cd
        sin_acc += rn * sd
        # radial residual derivatives
        rows.append(cells); cols.append(nb); vals.append(alpha * cd)
        rows.append(cells + n); cols.append(nb); vals.append(sd / rf)
        rows.append(cells); cols.append(nb + n); vals.append(-alpha * rn * sd)
        rows.append(cells + n); cols.append(nb + n); vals.append(rn * cd / rf)
        dgg_diag -= rn * cd / rf
        dgr_diag -= rn * sd / (rf * rf)

    rdot = alpha * (cos_acc - 4.0 * rf) + rf * lam.value(rf)
    g_res = sin_acc / rf
    if not params.omega.omega1_is_zero:
        g_res = g_res + params.omega.omega1_at(rf, alpha)
        h = 1e-6
        dw1 = (params.omega.omega1_at(rf + h, alpha)
               - params.omega.omega1_at(rf - h, alpha)) / (2.0 * h)
        dgr_diag += np.asarray(dw1)

    local = lam.value(rf) + rf * lam.slope(rf) - 4.0 * alpha
    rows.append(cells); cols.append(cells); vals.append(local)
    rows.append(cells + n); cols.append(cells); vals.append(dgr_diag)
    rows.append(cells + n); cols.append(cells + n); vals.append(dgg_diag)
    rows.append(cells); cols.append(cells + n); vals.append(alpha * sin_acc)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    # replace the G equation at the gauge cell with the pin
    pin_row = n + gauge_flat
    keep = rows != pin_row
    rows = np.append(rows[keep], pin_row)
    cols = np.append(cols[keep], pin_row)
    vals = np.append(vals[keep], 1.0)

    jac = sp.coo_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n)).tocsr()
    rhs = np.concatenate([rdot, g_res])
    rhs[pin_row] = tf[gauge_flat]
    return jac, rhs, float(max(np.max(np.abs(rdot)), np.max(np.abs(g_res))))


def _newton_polish(r, theta, params: ModelParams, tol: float, max_iter: int):
    grid = params.grid
    n = grid.n_cells
    nbidx = grid.neighbour_flat_indices()
    gauge_flat = grid.flat_index(GAUGE_CELL)
    theta = _gauge_shift(theta, grid)
    r = r.copy()
    floor = params.r_min

    best = math.inf
    for _ in range(max_iter):
        jac, rhs, res = _assemble_newton_system(r, theta, params, nbidx, gauge_flat)
        best = min(best, res)
        if res <= tol:
            return r, theta, res
        delta = spla.spsolve(jac.tocsc(), -rhs)
        dr = delta[:n].reshape(r.shape)
        dth = delta[n:].reshape(theta.shape)
        merit0 = float(np.dot(rhs, rhs))
        step = 1.0
        accepted = False
        while step >= 2.0 ** -14:
            r_try = r + step * dr
            th_try = theta + step * dth
            if np.all(r_try > floor):
                rhs_try, _ = _newton_residual(r_try, th_try, params, gauge_flat)
                if float(np.dot(rhs_try, rhs_try)) <= (1.0 - 1e-4 * step) * merit0:
                    r, theta = r_try, th_try
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            raise ConvergenceError("line search stalled in the rotating-wave solve",
                                   residual=best)
    raise ConvergenceError("rotating-wave solve did not converge", residual=best)


def _relax(r, theta, params: ModelParams, target: float, t_cap: float):
    """Integrate the co-rotating dynamics toward the attracting wave."""
    a = params.lam.a
    rate = abs(a * params.lam.slope_at_root)
    dt = 0.05 / rate
    if params.alpha > 0:
        dt = min(dt, 0.1 / (8.0 * params.alpha))
    z = r * np.exp(1j * theta)
    t = 0.0
    block = 5.0
    res = residual_inf_of(np.abs(z), np.angle(z), params)
    while res > target and t < t_cap:
        z = integrate_fixed(
            lambda y: rhs_complex_arrays(y, params, include_omega0=False),
            z, [block], dt)[0]
        t += block
        res = residual_inf_of(np.abs(z), np.angle(z), params)
    return np.abs(z), np.angle(z), res


def solve_rotating_wave(params: ModelParams, seed: tuple[np.ndarray, np.ndarray] | None = None,
                        tol: float = 1e-9, relax_target: float = 1e-3,
                        newton_direct_threshold: float = 0.5,
                        relax_t_cap: float = 600.0, max_newton: int = 40) -> SteadyState:
    """Solve for the rotating core defect at the given coupling strength.

    The seed defaults to the background amplitude with one phase winding
    around the grid centre. At alpha = 0 every phase profile is stationary,
    so the seed's phases are returned as-is (gauge fixed) with the amplitude
    pinned at the background value. For alpha > 0 the solve runs Newton with
    a gauge pin directly when the seed residual is moderate, falling back to
    dynamical relaxation when Newton cannot make progress.
    """
    grid = params.grid
    a = params.lam.a
    if seed is None:
        r, theta = default_rotating_seed(grid, a)
        seed_label = "default"
    else:
        r = np.asarray(seed[0], dtype=float).copy()
        theta = np.asarray(seed[1], dtype=float).copy()
        seed_label = "custom"

    fparams = {"seed": seed_label, "gauge_cell": GAUGE_CELL}
    if params.alpha == 0.0:
        r = np.full_like(r, a)
        theta = _gauge_shift(theta, grid)
        res = residual_inf_of(r, theta, params)
        return SteadyState(grid, r, theta, params.alpha, res, FAMILY_ROTATING,
                           family_params=fparams)

    res0 = residual_inf_of(r, theta, params)
    if res0 > newton_direct_threshold:
        r, theta, res0 = _relax(r, theta, params, relax_target, relax_t_cap)

    tries = 0
    while True:
        try:
            r, theta, _ = _newton_polish(r, theta, params, tol, max_newton)
            break
        except ConvergenceError:
            tries += 1
            if tries > 3:
                raise
            r, theta, _ = _relax(r, theta, params,
                                 relax_target / 10.0 ** tries, relax_t_cap)

    theta = _gauge_shift(theta, grid)
    res = residual_inf_of(r, theta, params)
    return SteadyState(grid, r, theta, params.alpha, res, FAMILY_ROTATING,
                       family_params=fparams)


def rotating_wave_continuation(params: ModelParams, alphas, step: float = 0.05,
                               tol: float = 1e-9) -> dict[float, SteadyState]:
    """March the rotating wave up in alpha, reusing each solution as the next seed.

    Returns the requested alpha values only; intermediate continuation points
    are solved but discarded.
    """
    targets = sorted(float(al) for al in alphas)
    if any(al < 0 for al in targets):
        raise ConstructionError("alpha values must be nonnegative")
    path = set(targets)
    if targets and targets[-1] > 0:
        k = 1
        while k * step < targets[-1] - 1e-12:
            path.add(round(k * step, 12))
            k += 1
    out: dict[float, SteadyState] = {}
    seed = None
    for al in sorted(path):
        state = solve_rotating_wave(params.with_alpha(al), seed=seed, tol=tol)
        seed = (state.r_bar, state.theta_bar)
        for t in targets:
            if abs(al - t) < 1e-12:
                out[t] = state
    return out


CENTRE_PHASES = {(1, 1): 0.0, (0, 1): 0.5 * np.pi, (0, 0): np.pi, (1, 0): 1.5 * np.pi}


def rotation_mismatch(state: SteadyState) -> tuple[float, float]:
    """Sup mismatch (amplitude, phase) of the quarter-turn symmetry.

    The solved wave satisfies r(1-j, i) = r(i, j) and
    theta(1-j, i) = theta(i, j) + pi/2 up to wrapping; `rotate_quarter`
    realizes exactly the pull-back along (i, j) -> (1-j, i).
    """
    rot_r = np.rot90(state.r_bar, -1)
    rot_t = np.rot90(state.theta_bar, -1)
    err_r = float(np.max(np.abs(rot_r - state.r_bar)))
    err_t = float(np.max(np.abs(wrap_angle(rot_t - state.theta_bar - 0.5 * np.pi))))
    return err_r, err_t


def centre_phase_errors(state: SteadyState) -> dict[tuple[int, int], float]:
    out = {}
    for cell, target in CENTRE_PHASES.items():
        a, b = state.grid.array_pos(cell)
        out[cell] = float(abs(wrap_angle(state.theta_bar[a, b] - target)))
    return out


def ring_cells(grid: LatticeGrid, m: int) -> list[tuple[int, int]]:
    """Cells of the m-th square ring around the grid centre, in angular order."""
    lo, hi = grid.index_range
    cells = []
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            if max(abs(i - 0.5), abs(j - 0.5)) == m - 0.5:
                cells.append((i, j))
    cells.sort(key=lambda c: math.atan2(c[1] - 0.5, c[0] - 0.5))
    return cells


def monotone_ring_fraction(state: SteadyState) -> float:
    """Fraction of full rings whose phases wind monotonically once around."""
    grid = state.grid
    k = grid.half_width
    good = 0
    total = 0
    for m in range(1, k + 1):
        cells = ring_cells(grid, m)
        vals = [state.theta_bar[grid.array_pos(c)] for c in cells]
        diffs = wrap_angle(np.diff(vals + vals[:1]))
        total += 1
        if np.all(diffs > 0.0):
            good += 1
    return good / total if total else float("nan")


@dataclass(frozen=True)
class SteadyReport:
    family: str
    residual_inf: float
    residual_interior_inf: float | None
    max_amp_dev: float
    amp_dev_over_alpha: float | None
    within_working_band: bool
    ok: bool
    extras: dict = field(default_factory=dict, compare=False)


def validate_steady(state: SteadyState, params: ModelParams, tol: float) -> SteadyReport:
    """Recompute the residual and structural diagnostics of a steady profile.

    `ok` requires the recomputed residual at or below `tol` (interior
    residual for boundary-flagged constructions) and the amplitude within the
    working band |r - a| <= a/2.
    """
    rdot, thdot = residual_parts(state.r_bar, state.theta_bar, params)
    res = float(max(np.max(np.abs(rdot)), np.max(np.abs(thdot))))
    interior = None
    if state.boundary_flagged:
        mask = params.grid.interior_mask()
        interior = float(max(np.max(np.abs(rdot[mask])), np.max(np.abs(thdot[mask]))))
    a = params.lam.a
    dev = float(np.max(np.abs(state.r_bar - a)))
    band = dev <= 0.5 * a
    extras: dict = {}
    if state.family == FAMILY_ROTATING:
        err_r, err_t = rotation_mismatch(state)
        extras["rotation_mismatch_r"] = err_r
        extras["rotation_mismatch_theta"] = err_t
        extras["centre_phase_errors"] = centre_phase_errors(state)
        extras["monotone_ring_fraction"] = monotone_ring_fraction(state)
    effective = interior if interior is not None else res
    return SteadyReport(
        family=state.family,
        residual_inf=res,
        residual_interior_inf=interior,
        max_amp_dev=dev,
        amp_dev_over_alpha=(dev / state.alpha) if state.alpha > 0 else None,
        within_working_band=band,
        ok=bool(effective <= tol and band),
        extras=extras,
    )
