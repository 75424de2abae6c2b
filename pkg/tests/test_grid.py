import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lolattice.grid import (
    DIRECTIONS,
    Boundary,
    ComplexField,
    LatticeGrid,
    PolarField,
    neighbour_sum_diff,
    rotate_quarter,
)


def test_side_and_index_range():
    g = LatticeGrid(2)
    assert g.side == 4
    assert g.n_cells == 16
    assert g.index_range == (-1, 2)
    assert g.contains((-1, 2))
    assert not g.contains((3, 0))
    assert not g.contains((0, -2))


def test_flat_index_enumerates_row_major():
    g = LatticeGrid(3)
    lo, hi = g.index_range
    seen = [g.flat_index((i, j)) for i in range(lo, hi + 1) for j in range(lo, hi + 1)]
    assert seen == list(range(36))


def test_array_pos_cell_at_roundtrip():
    g = LatticeGrid(4)
    for cell in [(-3, -3), (0, 0), (1, 1), (4, 4), (-3, 4)]:
        assert g.cell_at(g.array_pos(cell)) == cell


def test_require_cell_rejects_outside():
    g = LatticeGrid(2)
    with pytest.raises(IndexError):
        g.require_cell((3, 3))


def test_half_width_must_be_positive():
    with pytest.raises(ValueError):
        LatticeGrid(0)


def test_neighbour_order_matches_directions():
    g = LatticeGrid(3)
    assert g.neighbours((0, 0)) == [(di, dj) for di, dj in DIRECTIONS]


def test_neumann_missing_neighbour_becomes_self():
    g = LatticeGrid(2)
    # top-right corner loses the +i and +j steps
    assert g.neighbours((2, 2)) == [(2, 2), (1, 2), (2, 2), (2, 1)]
    assert g.neighbours((-1, 0)) == [(0, 0), (-1, 0), (-1, 1), (-1, -1)]


def test_periodic_wraps_both_axes():
    g = LatticeGrid(2, Boundary.PERIODIC)
    assert g.neighbours((2, 2)) == [(-1, 2), (1, 2), (2, -1), (2, 1)]
    assert g.neighbours((-1, -1)) == [(0, -1), (2, -1), (-1, 0), (-1, 2)]


@pytest.mark.parametrize("boundary", list(Boundary))
def test_shift_agrees_with_neighbour_enumeration(boundary):
    g = LatticeGrid(3, boundary)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 6))
    shifted = g.neighbour_values(x)
    lo, hi = g.index_range
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            nbs = g.neighbours((i, j))
            for k in range(4):
                assert shifted[k][g.array_pos((i, j))] == x[g.array_pos(nbs[k])]


@pytest.mark.parametrize("boundary", list(Boundary))
def test_neighbour_flat_indices_match_neighbours(boundary):
    g = LatticeGrid(2, boundary)
    idx = g.neighbour_flat_indices()
    assert idx.shape == (4, 16)
    lo, hi = g.index_range
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            for k, nb in enumerate(g.neighbours((i, j))):
                assert idx[k, g.flat_index((i, j))] == g.flat_index(nb)


def test_shift_rejects_wrong_shape():
    g = LatticeGrid(2)
    with pytest.raises(ValueError):
        g.shift(np.zeros((3, 3)), 1, 0)


def test_neighbour_sum_diff_is_five_point_stencil():
    g = LatticeGrid(4, Boundary.PERIODIC)
    x = np.zeros((8, 8))
    x[g.array_pos((0, 0))] = 1.0
    lap = neighbour_sum_diff(x, g)
    assert lap[g.array_pos((0, 0))] == -4.0
    for nb in g.neighbours((0, 0)):
        assert lap[g.array_pos(nb)] == 1.0
    assert lap.sum() == pytest.approx(0.0, abs=1e-15)


def test_neighbour_sum_diff_kills_constants_on_neumann():
    g = LatticeGrid(5)
    assert np.all(neighbour_sum_diff(np.full((10, 10), 3.7), g) == 0.0)


def test_interior_and_band_masks():
    g = LatticeGrid(2)
    assert int(g.interior_mask().sum()) == 4
    assert int(g.boundary_band_mask(1).sum()) == 12
    gp = LatticeGrid(2, Boundary.PERIODIC)
    assert gp.interior_mask().all()
    assert not gp.boundary_band_mask(1).any()


def test_rotate_quarter_is_order_four_permutation():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 6))
    y = x
    for _ in range(4):
        y = rotate_quarter(y)
    assert np.array_equal(y, x)
    assert sorted(rotate_quarter(x).ravel()) == sorted(x.ravel())


def test_rotate_quarter_cell_map():
    # out[(i, j)] = x[(1 - j, i)]
    g = LatticeGrid(3)
    x = np.random.default_rng(2).normal(size=(6, 6))
    out = rotate_quarter(x)
    lo, hi = g.index_range
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            assert out[g.array_pos((i, j))] == x[g.array_pos((1 - j, i))]


@given(st.integers(min_value=1, max_value=6), st.integers(-8, 8), st.integers(-8, 8))
@settings(max_examples=60, deadline=None)
def test_contains_iff_flat_index_valid(k, i, j):
    g = LatticeGrid(k)
    if g.contains((i, j)):
        assert 0 <= g.flat_index((i, j)) < g.n_cells
    else:
        with pytest.raises(IndexError):
            g.require_cell((i, j))


def test_polar_field_rejects_negative_amplitude():
    g = LatticeGrid(2)
    with pytest.raises(ValueError):
        PolarField(g, -np.ones((4, 4)), np.zeros((4, 4)))


def test_polar_field_rejects_nonfinite():
    g = LatticeGrid(2)
    r = np.ones((4, 4))
    r[0, 0] = np.nan
    with pytest.raises(ValueError):
        PolarField(g, r, np.zeros((4, 4)))


def test_field_accepts_flat_input():
    g = LatticeGrid(2)
    f = PolarField(g, np.ones(16), np.zeros(16))
    assert f.r.shape == (4, 4)


def test_complex_polar_roundtrip():
    g = LatticeGrid(3)
    rng = np.random.default_rng(3)
    z = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    back = ComplexField.from_z(g, z).to_polar().to_complex()
    assert np.allclose(back.z, z, atol=1e-14)


def test_to_polar_flags_exact_zeros():
    g = LatticeGrid(2)
    z = np.ones((4, 4), dtype=complex)
    z[1, 1] = 0.0
    pf = ComplexField.from_z(g, z).to_polar()
    assert pf.zero_cells is not None
    assert pf.zero_cells[1, 1]
    assert pf.theta[1, 1] == 0.0
