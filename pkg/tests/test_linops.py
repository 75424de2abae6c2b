import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lolattice.errors import FitError
from lolattice.grid import Boundary, LatticeGrid
from lolattice.linops import (
    build_operator,
    coupling_graph,
    default_dt,
    evolve_semigroup,
    fit_decay,
    measure_decay_suite,
    plain_laplacian,
)
from lolattice.model import LambdaSpec, ModelParams, OmegaSpec
from lolattice.steady import make_doubly_periodic, make_trivial, solve_rotating_wave


def cubic_params(grid, alpha):
    return ModelParams(alpha=alpha, lam=LambdaSpec.cubic(),
                       omega=OmegaSpec.constant(1.0), grid=grid)


def delta(grid):
    x = np.zeros((grid.side, grid.side))
    x[grid.array_pos((0, 0))] = 1.0
    return x


def test_plain_laplacian_stencil_on_delta():
    g = LatticeGrid(4, Boundary.PERIODIC)
    op = plain_laplacian(g)
    out = op(delta(g))
    assert out[g.array_pos((0, 0))] == -4.0
    for nb in g.neighbours((0, 0)):
        assert out[g.array_pos(nb)] == 1.0
    assert abs(out.sum()) <= 1e-14


def test_plain_laplacian_anisotropic_weights():
    g = LatticeGrid(3, Boundary.PERIODIC)
    op = plain_laplacian(g, d1=2.0, d2=0.5)
    out = op(delta(g))
    assert out[g.array_pos((1, 0))] == 2.0
    assert out[g.array_pos((0, 1))] == 0.5
    assert out[g.array_pos((0, 0))] == -5.0


def test_operator_kills_constants():
    for boundary in Boundary:
        g = LatticeGrid(4, boundary)
        op = plain_laplacian(g)
        assert np.max(np.abs(op(np.full((8, 8), 2.3)))) == 0.0


def test_operator_is_linear():
    g = LatticeGrid(4)
    op = plain_laplacian(g)
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 8, 8))
    assert np.max(np.abs(op(2.0 * x - 3.0 * y) - (2.0 * op(x) - 3.0 * op(y)))) < 1e-13


def test_cosine_operator_at_trivial_equals_plain():
    g = LatticeGrid(4)
    triv = make_trivial(cubic_params(g, 0.1))
    op = build_operator(triv, "cosine")
    ref = plain_laplacian(g)
    x = np.random.default_rng(1).normal(size=(8, 8))
    assert np.array_equal(op(x), ref(x))


def test_ratio_cosine_weights_on_doubly_periodic():
    # uniform amplitude, phase steps of 2 pi / 6: every weight is cos(pi/3)
    g = LatticeGrid(6, Boundary.PERIODIC)
    st_dp = make_doubly_periodic(cubic_params(g, 0.05), 6, 6)
    op = build_operator(st_dp, "ratio_cosine")
    for w in op.weights:
        assert np.allclose(w, 0.5, atol=1e-12)


def test_build_operator_rejects_unknown_kind():
    g = LatticeGrid(3)
    triv = make_trivial(cubic_params(g, 0.1))
    with pytest.raises(ValueError):
        build_operator(triv, "quartic")


def test_norm_bound_and_default_dt():
    g = LatticeGrid(3)
    op = plain_laplacian(g, d1=2.0, d2=0.5)
    assert op.max_weight == 2.0
    assert op.norm_bound == 16.0
    assert default_dt(op) == pytest.approx(0.1 / 16.0)


@given(arrays(np.float64, (6, 6),
              elements=st.floats(-10, 10, allow_nan=False, width=64)))
@settings(max_examples=50, deadline=None)
def test_apply_respects_norm_bound(x):
    g = LatticeGrid(3)
    op = plain_laplacian(g)
    assert np.max(np.abs(op(x))) <= op.norm_bound * np.max(np.abs(x)) + 1e-12


def test_semigroup_conserves_mass_on_periodic():
    g = LatticeGrid(8, Boundary.PERIODIC)
    op = plain_laplacian(g)
    states = evolve_semigroup(op, delta(g), [0.0, 1.0, 5.0])
    for s in states:
        assert s.sum() == pytest.approx(1.0, abs=1e-9)


def test_semigroup_property():
    g = LatticeGrid(6)
    op = plain_laplacian(g)
    x0 = delta(g)
    dt = default_dt(op)
    one_hop = evolve_semigroup(op, x0, [3.0], dt=dt)[0]
    two_hop = evolve_semigroup(op, evolve_semigroup(op, x0, [1.25], dt=dt)[0],
                               [1.75], dt=dt)[0]
    assert np.max(np.abs(one_hop - two_hop)) < 1e-9


def test_semigroup_time_zero_is_copy():
    g = LatticeGrid(3)
    op = plain_laplacian(g)
    x0 = delta(g)
    out = evolve_semigroup(op, x0, [0.0])[0]
    assert np.array_equal(out, x0)
    out[0, 0] = 5.0
    assert x0[0, 0] != 5.0


def test_heat_kernel_peak_amplitude():
    # sup of the evolved delta tracks the continuum 1/(4 pi t) on a big
    # enough periodic grid
    g = LatticeGrid(64, Boundary.PERIODIC)
    op = plain_laplacian(g)
    t = 40.0
    out = evolve_semigroup(op, delta(g), [t])[0]
    assert out.max() == pytest.approx(1.0 / (4 * np.pi * t), rel=0.02)


def test_fit_decay_power_exact():
    t = np.linspace(0.0, 50.0, 60)
    v = 0.7 * (1.0 + t) ** -1.5
    fit = fit_decay(t, v, "power")
    assert fit.rate == pytest.approx(1.5, abs=1e-10)
    assert fit.prefactor == pytest.approx(0.7, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.model == "power"


def test_fit_decay_exp_exact():
    t = np.linspace(0.0, 10.0, 40)
    v = 2.0 * np.exp(-0.7 * t)
    fit = fit_decay(t, v, "exp")
    assert fit.rate == pytest.approx(0.7, abs=1e-10)
    assert fit.prefactor == pytest.approx(2.0, rel=1e-8)


def test_fit_decay_growth_has_negative_rate():
    t = np.linspace(0.0, 20.0, 30)
    fit = fit_decay(t, (1 + t) ** 0.8, "power")
    assert fit.rate == pytest.approx(-0.8, abs=1e-10)


def test_fit_decay_window_selects_samples():
    t = np.linspace(0.0, 100.0, 101)
    v = (1.0 + t) ** -2.0
    fit = fit_decay(t, v, "power", window=(10.0, 50.0))
    assert fit.window == (10.0, 50.0)
    assert fit.n_samples == 41


def test_fit_decay_needs_enough_samples():
    t = np.linspace(0.0, 10.0, 20)
    v = np.exp(-t)
    with pytest.raises(FitError):
        fit_decay(t, v, "power", window=(9.0, 10.0))


def test_fit_decay_rejects_nonpositive_values():
    t = np.linspace(0.0, 10.0, 20)
    v = np.exp(-t)
    v[5] = 0.0
    with pytest.raises(FitError):
        fit_decay(t, v, "power")


def test_fit_decay_rejects_unknown_model():
    t = np.linspace(0.0, 10.0, 20)
    with pytest.raises(ValueError):
        fit_decay(t, np.exp(-t), "loglog")


def test_measure_decay_suite_shapes_and_fit():
    g = LatticeGrid(32, Boundary.PERIODIC)
    op = plain_laplacian(g)
    t_grid = np.linspace(0.0, 40.0, 25)
    table = measure_decay_suite(op, delta(g), [1, 2, np.inf], t_grid)
    assert table.times.shape == (25,)
    assert set(table.lp) == {1.0, 2.0, float("inf")}
    assert set(table.qp) == {1.0, 2.0, float("inf")}
    # ell^1 mass conserved on the periodic grid, so the fitted rate is zero
    assert np.allclose(table.lp[1.0], 1.0, atol=1e-9)
    assert table.fit("lp", 1, "power", window=(8.0, 32.0)).rate == pytest.approx(0.0, abs=1e-6)
    fit = table.fit("lp", np.inf, "power", window=(8.0, 32.0))
    assert 0.9 < fit.rate < 1.25
    assert fit.r_squared > 0.999


def test_measure_decay_suite_flags_boundary_arrival():
    g = LatticeGrid(8, Boundary.NEUMANN)
    op = plain_laplacian(g)
    t_grid = np.linspace(0.0, 60.0, 10)
    table = measure_decay_suite(op, delta(g), [2], t_grid, band_width=5)
    assert not table.flagged[0]
    assert table.flagged[-1]
    assert table.boundary_mass[-1] > 0.01


def test_coupling_graph_trivial_all_positive():
    g = LatticeGrid(4)
    triv = make_trivial(cubic_params(g, 0.1))
    graph = coupling_graph(triv)
    # undirected neumann bonds: 2 * n * (n-1) per axis
    assert graph.n_edges == 2 * 8 * 7
    assert graph.n_positive == graph.n_edges
    assert graph.n_zero == 0
    assert graph.n_negative == 0
    assert not graph.centre_ring_only


def test_coupling_graph_counts_periodic():
    g = LatticeGrid(4, Boundary.PERIODIC)
    triv = make_trivial(cubic_params(g, 0.1))
    assert coupling_graph(triv).n_edges == 2 * 8 * 8


def test_coupling_graph_rotating_wave_centre_ring():
    g = LatticeGrid(5)
    params = cubic_params(g, 0.1)
    wave = solve_rotating_wave(params)
    graph = coupling_graph(wave, zero_tol=1e-6)
    assert graph.n_negative == 0
    assert graph.n_zero == 4
    assert graph.centre_ring_only
    ring = {frozenset(e) for e in graph.zero_edges}
    assert ring == {
        frozenset({(0, 0), (0, 1)}),
        frozenset({(0, 1), (1, 1)}),
        frozenset({(1, 1), (1, 0)}),
        frozenset({(1, 0), (0, 0)}),
    }
