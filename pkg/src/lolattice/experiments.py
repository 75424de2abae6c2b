"""Scripted experiments probing the model's quantitative predictions.

Four pieces: amplitude-moment scans over growing lattices, the slaved
amplitude manifold (radial equilibrium at frozen phases) with its Newton
solver, exponential attraction of trajectories to that manifold, and the
algebraic phase-decay measurement in the slow time tau = alpha * t. Each
experiment emits a report carrying the fitted rates next to the predicted
ones; nothing here asserts, callers decide what counts as agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ConstructionError, ConvergenceError, FitError, SingularityError
from .grid import LatticeGrid, rotate_quarter
from .integrate import integrate_fixed
from .linops import DecayFit, fit_decay
from .model import ModelParams, coupling_sums, rhs_complex_arrays
from .norms import boundary_mass_fraction, lp_norm, qp_seminorm
from .steady import SteadyState, wrap_angle

ALPHA_SMALL_MAX = 0.25


def gaussian_bump(grid: LatticeGrid, width: float = 3.0) -> np.ndarray:
    """Discrete Gaussian of the given cell width, centred on the grid, ell^1
    normalized.

    The centre sits between the four middle cells so the bump keeps the
    lattice's quarter-turn symmetry.
    """
    if width <= 0.0:
        raise ValueError("width must be positive")
    ii, jj = grid.coord_arrays()
    sigma = 0.5 * width
    g = np.exp(-(((ii - 0.5) ** 2 + (jj - 0.5) ** 2) / (2.0 * sigma * sigma)))
    return g / g.sum()


def experiment_dt(params: ModelParams) -> float:
    """Step resolving both the radial relaxation rate and the stencil bound."""
    lam = params.lam
    fast = abs(lam.a * lam.slope_at_root)
    dt = 0.05 / fast if fast > 0 else math.inf
    if params.alpha > 0:
        dt = min(dt, 0.1 / (8.0 * params.alpha))
    return dt if math.isfinite(dt) else 0.05


@dataclass(frozen=True)
class ManifoldApprox:
    """Amplitude offset slaved to a phase field.

    s_star solves the radial equilibrium equation at frozen phases
    psi. sup_ratio reports ||s_star||_inf / sqrt(alpha); the construction
    enforces the <= 1.1 envelope only in the small-coupling regime
    (alpha <= 0.25) where it is meaningful.
    """

    psi: np.ndarray
    s_star: np.ndarray
    residual_inf: float
    alpha: float
    newton_iters: int

    def __post_init__(self):
        if self.residual_inf > 1e-10:
            raise ConstructionError(
                f"manifold residual {self.residual_inf:.3e} above 1e-10")
        if 0.0 < self.alpha <= ALPHA_SMALL_MAX:
            sup = float(np.max(np.abs(self.s_star)))
            if sup > 1.1 * math.sqrt(self.alpha):
                raise ConstructionError(
                    f"|s_star| reaches {sup:.3e}, above the sqrt(alpha) envelope "
                    f"{math.sqrt(self.alpha):.3e} with 10% slack")

    @property
    def sup_ratio(self) -> float:
        if self.alpha <= 0.0:
            return 0.0
        return float(np.max(np.abs(self.s_star))) / math.sqrt(self.alpha)


def _manifold_residual(s: np.ndarray, psi: np.ndarray, steady: SteadyState,
                       params: ModelParams) -> np.ndarray:
    r = steady.r_bar + s
    floor, cap = params.r_min, 1.5 * params.lam.a
    if np.any(r <= floor) or np.any(r >= cap):
        pos = np.unravel_index(int(np.argmax(np.abs(r - params.lam.a))), r.shape)
        raise SingularityError(params.grid.cell_at((int(pos[0]), int(pos[1]))),
                               float(r[pos]), floor)
    theta = steady.theta_bar + psi
    cos_sum, _ = coupling_sums(r, theta, params.grid)
    return params.alpha * (cos_sum - 4.0 * r) + r * params.lam.value(r)


def solve_critical_manifold(psi: np.ndarray, steady: SteadyState, params: ModelParams,
                            s0: np.ndarray | None = None, tol: float = 1e-10,
                            max_iter: int = 30) -> ManifoldApprox:
    """Newton solve for the slaved amplitude offset at frozen phases.

    The Jacobian is lam(r) + r lam'(r) - 4 alpha on the diagonal plus
    alpha cos(phase gap) per neighbour edge; near s = 0 it is dominated by
    a lam'(a) < 0, so the iteration started at 0 converges quadratically for
    small alpha. Warm starts via `s0` are used when tracking a trajectory.
    """
    psi = np.asarray(psi, dtype=float)
    grid = params.grid
    n2 = grid.n_cells
    s = np.zeros_like(psi) if s0 is None else np.asarray(s0, dtype=float).copy()
    nbr = grid.neighbour_flat_indices()
    rows = np.tile(np.arange(n2, dtype=np.intp), 4)
    theta = steady.theta_bar + psi
    theta_nbs = grid.neighbour_values(theta)
    cos_gaps = np.concatenate([(np.cos(tn - theta)).ravel() for tn in theta_nbs])
    cols = nbr.reshape(-1)
    lam = params.lam

    fval = _manifold_residual(s, psi, steady, params)
    fnorm = float(np.max(np.abs(fval)))
    iters = 0
    while fnorm > tol:
        if iters >= max_iter:
            raise ConvergenceError(
                f"manifold Newton stalled at residual {fnorm:.3e} after {max_iter} steps",
                residual=fnorm)
        r = steady.r_bar + s
        diag = lam.value(r) + r * lam.slope(r) - 4.0 * params.alpha
        jac = sp.coo_matrix((params.alpha * cos_gaps, (rows, cols)), shape=(n2, n2))
        jac = (jac + sp.diags(diag.ravel())).tocsc()
        ds = spsolve(jac, -fval.ravel()).reshape(psi.shape)
        step = 1.0
        for _ in range(10):
            trial = s + step * ds
            try:
                ftrial = _manifold_residual(trial, psi, steady, params)
            except SingularityError:
                step *= 0.5
                continue
            if np.max(np.abs(ftrial)) < fnorm:
                break
            step *= 0.5
        else:
            raise ConvergenceError(
                f"manifold line search failed at residual {fnorm:.3e}", residual=fnorm)
        s, fval = trial, ftrial
        fnorm = float(np.max(np.abs(fval)))
        iters += 1
    return ManifoldApprox(psi=psi, s_star=s, residual_inf=fnorm,
                          alpha=params.alpha, newton_iters=iters)


@dataclass(frozen=True)
class DecayExperimentReport:
    """Measured decay rates next to their predictions.

    `fits` is keyed "lp:<p>" / "qp:<p>" for phase norms (power law in
    1 + tau) and "rho_l1" for the amplitude-offset ell^1 norm (exponential
    in t). `times` is the slow-time grid for phase runs and the lab-time
    grid for attraction runs. Keys missing from `fits` were not measured.
    """

    family: str
    alpha: float
    eps: float
    times: np.ndarray
    series: dict[str, np.ndarray]
    fits: dict[str, DecayFit]
    predicted: dict[str, float]
    flagged: np.ndarray
    notes: tuple[str, ...] = ()

    def rate_error(self, key: str) -> float:
        return abs(self.fits[key].rate - self.predicted[key])


_MANIFOLD_NOTE = ("amplitude manifold approximated by the frozen-phase "
                  "equilibrium solve; O(alpha) relative error")


def _integrate_complex(z0: np.ndarray, params: ModelParams, sample_times,
                       dt: float) -> list[np.ndarray]:
    def rhs(z):
        return rhs_complex_arrays(z, params, include_omega0=False)

    return integrate_fixed(rhs, z0.astype(complex), sample_times, dt)


def _split_polar(z: np.ndarray, steady: SteadyState) -> tuple[np.ndarray, np.ndarray]:
    s = np.abs(z) - steady.r_bar
    psi = wrap_angle(np.angle(z) - steady.theta_bar)
    return s, psi


def run_manifold_attraction(steady: SteadyState, params: ModelParams, delta: float,
                            t_max: float = 5.0, n_samples: int = 30,
                            window: tuple[float, float] | None = None,
                            psi0: np.ndarray | None = None) -> DecayExperimentReport:
    """Kick the amplitudes off the slaved manifold and fit the return rate.

    Starts at s = s_star(psi0) + delta * bump, integrates the full system,
    and measures rho(t) = s(t) - s_star(psi(t)) in ell^1. The fitted
    exponential rate is compared against |a lam'(a)|, the linear relaxation
    rate of the radial equation.
    """
    a = params.lam.a
    if delta < 0 or delta > 0.1 * a:
        raise ConstructionError(f"delta = {delta} outside [0, {0.1 * a}]")
    if not params.omega.omega1_is_zero:
        raise ConstructionError("attraction run requires omega1 = 0")
    grid = params.grid
    psi = np.zeros((grid.side, grid.side)) if psi0 is None else np.asarray(psi0, float)
    base = solve_critical_manifold(psi, steady, params)
    rho0 = delta * gaussian_bump(grid)
    s_init = base.s_star + rho0
    z0 = (steady.r_bar + s_init) * np.exp(1j * (steady.theta_bar + psi))

    times = np.linspace(0.0, t_max, n_samples)[1:]
    dt = experiment_dt(params)
    zs = _integrate_complex(z0, params, times, dt)

    rho_norms = [lp_norm(rho0, 1)]
    warm = base.s_star
    for z in zs:
        s_t, psi_t = _split_polar(z, steady)
        m = solve_critical_manifold(psi_t, steady, params, s0=warm)
        warm = m.s_star
        rho_norms.append(lp_norm(s_t - m.s_star, 1))
    full_times = np.concatenate(([0.0], times))
    rho_norms = np.asarray(rho_norms)

    predicted = {"rho_l1": abs(a * params.lam.slope_at_root)}
    series = {"rho_l1": rho_norms}
    fits: dict[str, DecayFit] = {}
    notes = [_MANIFOLD_NOTE]
    if delta > 0:
        fits["rho_l1"] = fit_decay(full_times, rho_norms, "exp", window)
    else:
        notes.append("delta = 0: on-manifold start, rho tracked but not fitted")
    return DecayExperimentReport(
        family=steady.family, alpha=params.alpha, eps=delta, times=full_times,
        series=series, fits=fits, predicted=predicted,
        flagged=np.zeros(full_times.shape, dtype=bool), notes=tuple(notes))


def phase_norm_predictions(p_list, q_star: float = math.inf) -> dict[str, float]:
    """Predicted slow-time power-law exponents per norm key."""
    out: dict[str, float] = {}
    for p in p_list:
        p = float(p)
        key = "inf" if math.isinf(p) else f"{p:g}"
        out[f"lp:{key}"] = 1.0 - (0.0 if math.isinf(p) else 1.0 / p)
        q_exp = 2.0 - (0.0 if math.isinf(p) else 1.0 / p)
        qs_exp = 2.0 - (0.0 if math.isinf(q_star) else 1.0 / q_star)
        out[f"qp:{key}"] = min(q_exp, qs_exp)
    return out


def norm_key(p: float) -> str:
    return "inf" if math.isinf(float(p)) else f"{float(p):g}"


def run_phase_decay(steady: SteadyState, params: ModelParams, eps: float,
                    tau_max: float, p_list, rho0_scale: float = 0.0,
                    psi0: np.ndarray | None = None, remove_mean: bool = True,
                    n_samples: int = 30, q_star: float = math.inf,
                    window: tuple[float, float] | None = None,
                    allow_nonzero_omega1: bool = False) -> DecayExperimentReport:
    """Perturb the phases and fit algebraic decay in the slow time tau = alpha t.

    psi0 defaults to eps times the unit-mass bump; s0 sits on the slaved
    manifold plus rho0_scale times the bump. Norm samples are taken on a
    log-spaced tau grid and fitted as powers of (1 + tau). The constant
    phase direction is neutral, so the spatial mean of psi is removed before
    norms unless `remove_mean` is False (the gauge diagnostic). Predictions:
    1 - 1/p for the ell^p norms, min(2 - 1/p, 2 - 1/q_star) for Q_p.
    """
    if params.alpha <= 0:
        raise ConstructionError("phase decay needs alpha > 0")
    if not params.omega.omega1_is_zero and not allow_nonzero_omega1:
        raise ConstructionError("phase decay requires omega1 = 0")
    grid = params.grid
    bump = gaussian_bump(grid)
    psi = eps * bump if psi0 is None else np.asarray(psi0, dtype=float)
    base = solve_critical_manifold(psi, steady, params)
    s_init = base.s_star + rho0_scale * bump
    z0 = (steady.r_bar + s_init) * np.exp(1j * (steady.theta_bar + psi))

    taus = np.geomspace(tau_max / 250.0, tau_max, n_samples)
    times = taus / params.alpha
    dt = experiment_dt(params)
    zs = _integrate_complex(z0, params, times, dt)

    ps = [float(p) for p in p_list]
    series: dict[str, list[float]] = {f"lp:{norm_key(p)}": [] for p in ps}
    series.update({f"qp:{norm_key(p)}": [] for p in ps})
    if rho0_scale > 0:
        series["rho_l1"] = []
    bmass = []
    warm = base.s_star
    for z in zs:
        s_t, psi_t = _split_polar(z, steady)
        if remove_mean:
            psi_t = psi_t - psi_t.mean()
        for p in ps:
            k = norm_key(p)
            series[f"lp:{k}"].append(lp_norm(psi_t, p))
            series[f"qp:{k}"].append(qp_seminorm(psi_t, grid, p))
        if rho0_scale > 0:
            m = solve_critical_manifold(psi_t, steady, params, s0=warm)
            warm = m.s_star
            series["rho_l1"].append(lp_norm(s_t - m.s_star, 1))
        bmass.append(boundary_mass_fraction(np.abs(psi_t), grid, 5))
    arrays = {k: np.asarray(v) for k, v in series.items()}
    flagged = np.asarray(bmass) > 0.01

    predicted = phase_norm_predictions(ps, q_star)
    notes = [_MANIFOLD_NOTE]
    if not params.omega.omega1_is_zero:
        notes.append("omega1 != 0: outside the scope of the decay predictions")
    if flagged.any():
        notes.append(f"{int(flagged.sum())} samples flagged for boundary mass > 1%")
    if not remove_mean:
        notes.append("spatial mean retained (gauge diagnostic)")

    keep = ~flagged
    fit_t = taus[keep]
    fits: dict[str, DecayFit] = {}
    for key, vals in arrays.items():
        try:
            if key == "rho_l1":
                fits[key] = fit_decay(times[keep], vals[keep], "exp")
            else:
                fits[key] = fit_decay(fit_t, vals[keep], "power", window)
        except FitError as exc:
            notes.append(f"{key} not fitted: {exc}")
    if rho0_scale > 0:
        predicted["rho_l1"] = abs(params.lam.a * params.lam.slope_at_root)
    return DecayExperimentReport(
        family=steady.family, alpha=params.alpha, eps=eps, times=taus,
        series=arrays, fits=fits, predicted=predicted, flagged=flagged,
        notes=tuple(notes))


def amplitude_moment(state: SteadyState, a: float, p: float) -> float:
    """Sum of |r_bar - a|^p over all cells; sup of the deviation at p = inf."""
    dev = np.abs(state.r_bar - a)
    if math.isinf(p):
        return float(np.max(dev))
    return float(np.sum(dev ** float(p)))


def hyp4_sum(state: SteadyState, p: float) -> float:
    """Double sum over cells and neighbours of |r_nb / r_c - 1|^p."""
    r = state.r_bar
    total = 0.0
    for rn in state.grid.neighbour_values(r):
        total += float(np.sum(np.abs(rn / r - 1.0) ** float(p)))
    return total


TREND_GROWING = "growing"
TREND_SATURATING = "saturating"
TREND_INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class MpScan:
    """Amplitude-deviation moments across lattice sizes.

    values[(alpha, p, N)] holds the moment sum, double_sums the
    neighbour-ratio double sum at the same key. Trends compare the two
    largest solved N per (alpha, p): relative growth above `grow_tol` is
    "growing", below `sat_tol` "saturating", otherwise indeterminate.
    """

    family: str
    alpha_list: tuple[float, ...]
    p_list: tuple[float, ...]
    N_list: tuple[int, ...]
    values: dict
    double_sums: dict
    failures: dict = field(default_factory=dict)
    grow_tol: float = 0.05
    sat_tol: float = 0.01

    def solved_sizes(self, alpha: float) -> list[int]:
        return [N for N in self.N_list if (alpha, N) not in self.failures]

    def relative_change(self, alpha: float, p: float,
                        n_pair: tuple[int, int] | None = None) -> float:
        """Relative change of the moment between two sizes; defaults to the
        two largest solved N. An explicit `n_pair` widens the comparison."""
        if n_pair is None:
            sizes = self.solved_sizes(alpha)
            if len(sizes) < 2:
                return math.nan
            n_pair = (sizes[-2], sizes[-1])
        n1, n2 = n_pair
        if (alpha, n1) in self.failures or (alpha, n2) in self.failures:
            return math.nan
        v1 = self.values[(alpha, p, n1)]
        v2 = self.values[(alpha, p, n2)]
        if v1 == 0.0:
            return 0.0 if v2 == 0.0 else math.inf
        return (v2 - v1) / v1

    def trend(self, alpha: float, p: float,
              n_pair: tuple[int, int] | None = None) -> str:
        rel = self.relative_change(alpha, p, n_pair)
        if math.isnan(rel):
            return TREND_INDETERMINATE
        if rel >= self.grow_tol:
            return TREND_GROWING
        if abs(rel) <= self.sat_tol:
            return TREND_SATURATING
        return TREND_INDETERMINATE


def scan_hypothesis4(family_builder, alpha_list, p_list, N_list, a: float = 1.0,
                     family: str = "", grow_tol: float = 0.05,
                     sat_tol: float = 0.01) -> MpScan:
    """Tabulate amplitude moments for a steady family over growing lattices.

    family_builder(alpha, N) returns the steady state; failures are recorded
    per (alpha, N) and the scan continues.
    """
    alphas = tuple(float(x) for x in alpha_list)
    ps = tuple(float(x) for x in p_list)
    Ns = tuple(int(x) for x in N_list)
    values: dict = {}
    dsums: dict = {}
    failures: dict = {}
    fam = family
    for al in alphas:
        for N in Ns:
            try:
                state = family_builder(al, N)
            except Exception as exc:  # solver failures must not kill the scan
                failures[(al, N)] = f"{type(exc).__name__}: {exc}"
                continue
            if not fam:
                fam = state.family
            for p in ps:
                values[(al, p, N)] = amplitude_moment(state, a, p)
                dsums[(al, p, N)] = hyp4_sum(state, p)
    return MpScan(family=fam or "unknown", alpha_list=alphas, p_list=ps,
                  N_list=Ns, values=values, double_sums=dsums,
                  failures=failures, grow_tol=grow_tol, sat_tol=sat_tol)


@dataclass(frozen=True)
class RotationReport:
    """Spatial and temporal quarter-turn mismatches of a sampled trajectory.

    spatial_max is the worst |z composed with the quarter-turn cell map
    minus i z| over all samples; temporal_max compares samples a quarter
    period apart against i z. Report only, nothing asserted.
    """

    spatial_max: float
    temporal_max: float
    period: float
    n_samples: int
    n_pairs: int


def rotating_wave_trajectory(steady: SteadyState, params: ModelParams,
                             base_times, dt: float | None = None
                             ) -> tuple[np.ndarray, list[np.ndarray]]:
    """Lab-frame complex trajectory from a steady profile, sampled at each
    base time and a quarter period later."""
    w0 = params.omega.omega0(params.alpha)
    if w0 == 0.0:
        raise ConstructionError("quarter-period sampling needs omega0 != 0")
    quarter = 0.25 * (2.0 * math.pi / abs(w0))
    ts = sorted({float(t) for t in base_times} |
                {float(t) + quarter for t in base_times})
    z0 = steady.r_bar * np.exp(1j * steady.theta_bar)
    if dt is None:
        dt = experiment_dt(params)
        dt = min(dt, (2.0 * math.pi / abs(w0)) / 200.0)

    def rhs(z):
        return rhs_complex_arrays(z, params, include_omega0=True)

    positive = [t for t in ts if t > 0.0]
    states = integrate_fixed(rhs, z0.astype(complex), positive, dt)
    if ts and ts[0] == 0.0:
        states = [z0.astype(complex)] + states
    return np.asarray(ts), states


def check_rotational_identity(times, states, steady: SteadyState,
                              params: ModelParams) -> RotationReport:
    """Measure how far a trajectory is from quarter-turn equivariance.

    Spatially each sample is compared against i z after the quarter-turn
    relabelling of cells; temporally samples separated by a quarter period
    are compared against i z of the earlier one.
    """
    w0 = params.omega.omega0(params.alpha)
    if w0 == 0.0:
        raise ConstructionError("rotational identity needs omega0 != 0")
    period = 2.0 * math.pi / abs(w0)
    quarter = 0.25 * period
    times = np.asarray([float(t) for t in times])
    spatial = 0.0
    for z in states:
        spatial = max(spatial, float(np.max(np.abs(rotate_quarter(z) - 1j * z))))
    temporal = 0.0
    n_pairs = 0
    tol = 1e-9 * max(1.0, period)
    for i, ti in enumerate(times):
        for j in range(i + 1, len(times)):
            if abs((times[j] - ti) - quarter) <= tol:
                temporal = max(temporal, float(np.max(np.abs(
                    states[j] - 1j * states[i]))))
                n_pairs += 1
    return RotationReport(spatial_max=spatial, temporal_max=temporal,
                          period=period, n_samples=len(states), n_pairs=n_pairs)
