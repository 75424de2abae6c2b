"""Lattice dynamics with amplitude-dependent growth and rotation.

Each cell carries a complex value z and evolves by nearest-neighbour coupling
plus a local term:

    dz/dt = alpha * sum_nb (z_nb - z) + z * (lam(|z|) + i * omega(|z|, alpha))

with omega(R, alpha) = omega0(alpha) + alpha * omega1(R, alpha). The local
growth rate lam has a simple zero at an amplitude a > 0 with negative slope,
so the uncoupled cell settles on the circle |z| = a.

The polar form works in the frame co-rotating at omega0, which removes omega0
from the equations entirely:

    dr/dt     = alpha * sum_nb (r_nb cos(th_nb - th) - r) + r lam(r)
    dtheta/dt = alpha * [ sum_nb (r_nb / r) sin(th_nb - th) + omega1(r, alpha) ]

Perturbations (s, psi) about a steady profile (r_bar, theta_bar) are measured
by the centered residual functions F (radial) and G (phase, with
dpsi/dt = alpha * G) and their decomposition used in the decay analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConstructionError, SingularityError
from .grid import ComplexField, LatticeGrid, PolarField

if TYPE_CHECKING:
    from .steady import SteadyState

_OMEGA1_ALPHA_PROBES = (0.0, 0.05, 0.25, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class LambdaSpec:
    """Local amplitude growth rate with its stabilizing root.

    `a` is the amplitude where lam vanishes and `slope_at_root` = lam'(a) < 0.
    """

    kind: str
    coeffs: tuple[float, ...]
    a: float
    slope_at_root: float

    @classmethod
    def cubic(cls) -> "LambdaSpec":
        """lam(R) = 1 - R^2, root a = 1, slope -2."""
        return cls(kind="cubic", coeffs=(1.0, 0.0, -1.0), a=1.0, slope_at_root=-2.0)

    @classmethod
    def polynomial(cls, coeffs, r_max: float = 10.0) -> "LambdaSpec":
        """Polynomial lam from ascending coefficients.

        Locates the smallest positive root with negative slope by sampling on
        (0, r_max] and bisecting; fails if no such root exists.
        """
        coeffs = tuple(float(c) for c in coeffs)
        if len(coeffs) < 2 or not all(np.isfinite(coeffs)):
            raise ConstructionError("need at least two finite coefficients")

        def val(r):
            return npoly.polyval(r, coeffs)

        rs = np.linspace(0.0, r_max, 4001)
        vs = val(rs)
        root = None
        for k in range(len(rs) - 1):
            if vs[k] > 0.0 and vs[k + 1] <= 0.0 and rs[k] > 0.0:
                lo, hi = rs[k], rs[k + 1]
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if val(mid) > 0.0:
                        lo = mid
                    else:
                        hi = mid
                    if hi - lo < 1e-15:
                        break
                root = 0.5 * (lo + hi)
                break
        if root is None or root <= 0.0:
            raise ConstructionError("no positive root with a downward crossing found")
        dcoeffs = npoly.polyder(coeffs)
        slope = float(npoly.polyval(root, dcoeffs))
        if not slope < 0.0:
            raise ConstructionError(f"slope at root {root:.6g} is {slope:.3e}, not negative")
        return cls(kind="polynomial", coeffs=coeffs, a=float(root), slope_at_root=slope)

    def value(self, r):
        if self.kind == "cubic":
            return 1.0 - np.asarray(r) ** 2 if np.ndim(r) else 1.0 - r * r
        return npoly.polyval(r, self.coeffs)

    def slope(self, r):
        if self.kind == "cubic":
            return -2.0 * np.asarray(r) if np.ndim(r) else -2.0 * r
        return npoly.polyval(r, npoly.polyder(self.coeffs))

    def __call__(self, r):
        return self.value(r)


@dataclass(frozen=True)
class OmegaSpec:
    """Rotation rate split omega = omega0(alpha) + alpha * omega1(R, alpha).

    `omega1_is_zero` marks the restriction under which the phase-decay
    results hold; constructors set it, and ModelParams verifies that omega1
    actually vanishes at the background amplitude.
    """

    omega0: Callable[[float], float]
    omega1: Callable[[np.ndarray, float], np.ndarray] | None
    omega1_is_zero: bool

    @classmethod
    def constant(cls, w0: float = 1.0) -> "OmegaSpec":
        w0 = float(w0)
        return cls(omega0=lambda alpha: w0, omega1=None, omega1_is_zero=True)

    @classmethod
    def with_omega1(cls, omega0: Callable[[float], float],
                    omega1: Callable[[np.ndarray, float], np.ndarray]) -> "OmegaSpec":
        return cls(omega0=omega0, omega1=omega1, omega1_is_zero=False)

    def omega1_at(self, r, alpha: float):
        if self.omega1 is None:
            return np.zeros_like(np.asarray(r, dtype=float))
        return np.asarray(self.omega1(r, alpha), dtype=float)


@dataclass(frozen=True)
class ModelParams:
    """Coupling strength, local dynamics, and the grid they act on."""

    alpha: float
    lam: LambdaSpec
    omega: OmegaSpec
    grid: LatticeGrid

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise ConstructionError(f"alpha must be finite and >= 0, got {self.alpha}")
        a = self.lam.a
        for al in _OMEGA1_ALPHA_PROBES:
            w1 = float(np.asarray(self.omega.omega1_at(a, al)))
            if abs(w1) > 1e-12:
                raise ConstructionError(
                    f"omega1({a:.6g}, {al}) = {w1:.3e}; must vanish at the background amplitude"
                )

    @property
    def r_min(self) -> float:
        """Amplitude floor below which phases stop being trustworthy."""
        return self.lam.a / 8.0

    def with_alpha(self, alpha: float) -> "ModelParams":
        return ModelParams(alpha=float(alpha), lam=self.lam, omega=self.omega, grid=self.grid)


def _guard_amplitudes(r: np.ndarray, params: ModelParams) -> None:
    floor = params.r_min
    if np.any(r <= floor):
        pos = np.unravel_index(int(np.argmin(r)), r.shape)
        cell = params.grid.cell_at((int(pos[0]), int(pos[1])))
        raise SingularityError(cell, float(r[pos]), floor)


def _neighbour_complex_sum(w: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    acc = None
    for nb in grid.neighbour_values(w):
        acc = nb.copy() if acc is None else acc + nb
    return acc


def coupling_sums(r: np.ndarray, theta: np.ndarray, grid: LatticeGrid,
                  amplitudes: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell sums over neighbours of r_nb * cos/sin(theta_nb - theta).

    Computed through one complex exponential per cell rather than per-edge
    trig. `amplitudes` substitutes a different amplitude field for the
    neighbour values while keeping the phases.
    """
    eith = np.exp(1j * theta)
    w = (r if amplitudes is None else amplitudes) * eith
    prod = _neighbour_complex_sum(w, grid) * np.conj(eith)
    return prod.real, prod.imag


def rhs_polar_arrays(r: np.ndarray, theta: np.ndarray, params: ModelParams
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Co-rotating polar vector field on raw arrays."""
    _guard_amplitudes(r, params)
    cos_sum, sin_sum = coupling_sums(r, theta, params.grid)
    rdot = params.alpha * (cos_sum - 4.0 * r) + r * params.lam.value(r)
    thdot = params.alpha * (sin_sum / r)
    if not params.omega.omega1_is_zero:
        thdot = thdot + params.alpha * params.omega.omega1_at(r, params.alpha)
    return rdot, thdot


def rhs_polar(state: PolarField, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative (dr/dt, dtheta/dt) of a polar state, co-rotating frame."""
    return rhs_polar_arrays(state.r, state.theta, params)


def rhs_complex_arrays(z: np.ndarray, params: ModelParams,
                       include_omega0: bool = True) -> np.ndarray:
    """Cartesian vector field; set include_omega0=False for the co-rotating frame."""
    rr = np.abs(z)
    local = params.lam.value(rr).astype(complex)
    if include_omega0:
        local = local + 1j * params.omega.omega0(params.alpha)
    if not params.omega.omega1_is_zero:
        local = local + 1j * params.alpha * params.omega.omega1_at(rr, params.alpha)
    s = _neighbour_complex_sum(z, params.grid)
    return params.alpha * (s - 4.0 * z) + z * local


def rhs_complex(state: ComplexField, params: ModelParams,
                include_omega0: bool = True) -> ComplexField:
    zdot = rhs_complex_arrays(state.z, params, include_omega0=include_omega0)
    return ComplexField(state.grid, zdot.real, zdot.imag)


def perturbed_state(steady: "SteadyState", s: np.ndarray, psi: np.ndarray) -> PolarField:
    """Polar state (r_bar + s, theta_bar + psi)."""
    return PolarField(steady.grid, steady.r_bar + s, steady.theta_bar + psi)


def f_centered(s: np.ndarray, psi: np.ndarray, steady: "SteadyState",
               params: ModelParams) -> np.ndarray:
    """Radial residual at the perturbed state; vanishes with the steady residual at (0, 0)."""
    r = steady.r_bar + s
    _guard_amplitudes(r, params)
    theta = steady.theta_bar + psi
    cos_sum, _ = coupling_sums(r, theta, params.grid)
    return params.alpha * (cos_sum - 4.0 * r) + r * params.lam.value(r)


def g_centered(s: np.ndarray, psi: np.ndarray, steady: "SteadyState",
               params: ModelParams) -> np.ndarray:
    """Phase residual G at the perturbed state; dpsi/dt = alpha * G."""
    r = steady.r_bar + s
    _guard_amplitudes(r, params)
    theta = steady.theta_bar + psi
    _, sin_sum = coupling_sums(r, theta, params.grid)
    out = sin_sum / r
    if not params.omega.omega1_is_zero:
        out = out + params.omega.omega1_at(r, params.alpha)
    return out


def f_tilde(s: np.ndarray, psi: np.ndarray, steady: "SteadyState",
            params: ModelParams) -> np.ndarray:
    """F with its leading linear radial term a*lam'(a)*s removed.

    What is left is superlinear in s plus coupling terms of size O(alpha).
    """
    lam = params.lam
    return f_centered(s, psi, steady, params) - lam.a * lam.slope_at_root * s


def g_ratio_part(s: np.ndarray, psi: np.ndarray, steady: "SteadyState",
                 params: ModelParams) -> np.ndarray:
    """Piece of G driven by the amplitude-ratio deviation from the steady profile.

    sum_nb ((r_bar+s)_nb/(r_bar+s) - r_bar_nb/r_bar) * sin(angle difference);
    identically zero at s = 0.
    """
    r = steady.r_bar + s
    _guard_amplitudes(r, params)
    theta = steady.theta_bar + psi
    _, sin_full = coupling_sums(r, theta, params.grid)
    _, sin_frozen = coupling_sums(r, theta, params.grid, amplitudes=steady.r_bar)
    return sin_full / r - sin_frozen / steady.r_bar


def g_curvature_part(psi: np.ndarray, steady: "SteadyState",
                     params: ModelParams) -> np.ndarray:
    """Piece of G beyond the linearization in the phase differences.

    sum_nb (r_bar_nb/r_bar) * [sin(A + d) - sin(A) - cos(A) d] with
    A the steady phase difference and d the perturbation difference, using
    cos(A)(sin d - d) - 2 sin(A) sin^2(d/2) to stay accurate for |d| << 1.
    """
    grid = params.grid
    rb = steady.r_bar
    out = np.zeros_like(psi, dtype=float)
    rb_nbs = grid.neighbour_values(rb)
    th_nbs = grid.neighbour_values(steady.theta_bar)
    psi_nbs = grid.neighbour_values(psi)
    for rb_nb, th_nb, psi_nb in zip(rb_nbs, th_nbs, psi_nbs):
        a = th_nb - steady.theta_bar
        d = psi_nb - psi
        bracket = np.cos(a) * (np.sin(d) - d) - 2.0 * np.sin(a) * np.sin(0.5 * d) ** 2
        out += (rb_nb / rb) * bracket
    return out
