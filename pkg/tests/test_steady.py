import math

import numpy as np
import pytest

from lolattice.errors import ConstructionError
from lolattice.grid import Boundary, LatticeGrid, rotate_quarter
from lolattice.model import LambdaSpec, ModelParams, OmegaSpec
from lolattice.steady import (
    CENTRE_PHASES,
    GAUGE_CELL,
    centre_phase_errors,
    make_doubly_periodic,
    make_traveling_wave,
    make_trivial,
    monotone_ring_fraction,
    residual_inf_of,
    ring_cells,
    rotating_wave_continuation,
    rotation_mismatch,
    solve_rotating_wave,
    solve_uniform_amplitude,
    validate_steady,
    wrap_angle,
)

SQRT_09 = 0.9486832980505138  # uniform amplitude at coupling deficit 2, alpha 0.05


def cubic_params(grid, alpha):
    return ModelParams(alpha=alpha, lam=LambdaSpec.cubic(),
                       omega=OmegaSpec.constant(1.0), grid=grid)


def test_wrap_angle_range():
    # half-open convention [-pi, pi)
    x = np.array([0.0, np.pi, -np.pi, 3 * np.pi, -7.5])
    w = wrap_angle(x)
    assert np.all(w >= -np.pi)
    assert np.all(w < np.pi)
    assert wrap_angle(np.pi) == pytest.approx(-np.pi)
    assert wrap_angle(0.5) == pytest.approx(0.5)


def test_trivial_state_is_exact():
    for boundary in Boundary:
        g = LatticeGrid(4, boundary)
        params = cubic_params(g, 0.3)
        triv = make_trivial(params)
        assert np.all(triv.r_bar == 1.0)
        assert np.all(triv.theta_bar == 0.0)
        assert triv.residual_inf <= 1e-14
        assert triv.family == "trivial"


def test_uniform_amplitude_bisection_oracle():
    lam = LambdaSpec.cubic()
    # lambda(r) = 0.1  =>  r = sqrt(0.9)
    r = solve_uniform_amplitude(lam, 0.1)
    assert r == pytest.approx(SQRT_09, abs=1e-12)
    assert r == pytest.approx(math.sqrt(0.9), abs=1e-13)
    assert solve_uniform_amplitude(lam, 0.0) == pytest.approx(1.0, abs=1e-13)


def test_uniform_amplitude_rejects_unreachable_target():
    with pytest.raises(ConstructionError):
        solve_uniform_amplitude(LambdaSpec.cubic(), 2.0)


def test_doubly_periodic_amplitude_and_residual():
    g = LatticeGrid(6, Boundary.PERIODIC)
    params = cubic_params(g, 0.05)
    st = make_doubly_periodic(params, 6, 6)
    assert np.allclose(st.r_bar, SQRT_09, atol=1e-12)
    assert st.residual_inf <= 1e-12
    # phases advance by 2 pi / 6 per step along each axis
    pos0 = g.array_pos((0, 0))
    pos1 = g.array_pos((0, 1))
    dth = wrap_angle(st.theta_bar[pos1] - st.theta_bar[pos0])
    assert abs(dth) == pytest.approx(2 * np.pi / 6, abs=1e-12)


def test_doubly_periodic_needs_divisible_side():
    g = LatticeGrid(6, Boundary.PERIODIC)  # side 12, not divisible by 5
    with pytest.raises(ConstructionError):
        make_doubly_periodic(cubic_params(g, 0.05), 5, 5)


def test_doubly_periodic_on_neumann_flags_edge_residual():
    # truncation breaks the winding balance at the edge only
    g = LatticeGrid(6, Boundary.NEUMANN)
    st = make_doubly_periodic(cubic_params(g, 0.05), 6, 6)
    assert st.boundary_flagged
    assert st.residual_interior_inf <= 1e-12
    assert st.residual_inf > 1e-3


def test_traveling_wave_residual_and_uniformity():
    g = LatticeGrid(8, Boundary.PERIODIC)
    params = cubic_params(g, 0.05)
    st = make_traveling_wave(params, 8)
    assert st.residual_inf <= 1e-12
    assert np.ptp(st.r_bar) <= 1e-12
    # constant along j: phase depends on i only
    assert np.allclose(np.ptp(st.theta_bar, axis=1), 0.0, atol=1e-12)


def test_rotating_wave_small_grid():
    g = LatticeGrid(5)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    assert wave.residual_inf <= 1e-9
    assert wave.family == "rotating_wave"
    # gauge cell pinned at zero phase
    assert abs(wave.theta_bar[g.array_pos(GAUGE_CELL)]) <= 1e-12
    errs = centre_phase_errors(wave)
    assert max(errs.values()) <= 1e-7
    assert set(errs) == set(CENTRE_PHASES)


def test_rotating_wave_amplitude_profile():
    g = LatticeGrid(6)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    # dips near the core, approaches the background outward
    centre = wave.r_bar[g.array_pos((0, 0))]
    edge = wave.r_bar[0, 0]
    assert centre < edge <= 1.0 + 1e-6
    assert monotone_ring_fraction(wave) == 1.0


def test_rotating_wave_quarter_turn_symmetry():
    g = LatticeGrid(5)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    spatial, _ = rotation_mismatch(wave)
    assert spatial <= 1e-7
    # the amplitude field alone is symmetric under the quarter turn
    assert np.max(np.abs(rotate_quarter(wave.r_bar) - wave.r_bar)) <= 1e-7


def test_rotating_wave_alpha_zero_branch():
    g = LatticeGrid(4)
    params = cubic_params(g, 0.0)
    wave = solve_rotating_wave(params)
    assert np.allclose(wave.r_bar, 1.0, atol=1e-12)
    assert wave.residual_inf <= 1e-12
    assert abs(wave.theta_bar[g.array_pos(GAUGE_CELL)]) <= 1e-12


def test_continuation_reaches_larger_alpha():
    g = LatticeGrid(5)
    params = cubic_params(g, 1.0)
    states = rotating_wave_continuation(params, [0.1, 0.5, 1.0])
    assert set(states) == {0.1, 0.5, 1.0}
    for alpha, st in states.items():
        assert st.residual_inf <= 1e-9
        assert st.alpha == alpha
    # deeper core depression at stronger coupling
    r_mid = [states[a].r_bar[g.array_pos((0, 0))] for a in (0.1, 0.5, 1.0)]
    assert r_mid[0] > r_mid[1] > r_mid[2]


def test_ring_cells_sizes():
    g = LatticeGrid(4)
    assert len(ring_cells(g, 1)) == 4
    assert len(ring_cells(g, 2)) == 12
    # rings tile the grid
    total = sum(len(ring_cells(g, m)) for m in range(1, 5))
    assert total == g.n_cells


def test_validate_steady_reports():
    g = LatticeGrid(4)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    rep = validate_steady(wave, params, tol=1e-8)
    assert rep.ok
    assert rep.residual_inf <= 1e-8
    assert rep.family == "rotating_wave"
    bad = validate_steady(wave, cubic_params(g, 0.2), tol=1e-8)
    assert not bad.ok


def test_residual_inf_of_matches_state():
    g = LatticeGrid(4)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    assert residual_inf_of(wave.r_bar, wave.theta_bar, params) == pytest.approx(
        wave.residual_inf, rel=1e-6, abs=1e-12)
