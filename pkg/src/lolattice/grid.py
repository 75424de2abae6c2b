"""Square lattice truncations, boundary rules, and field containers.

Cells live at integer pairs (i, j) with i, j in {-K+1, ..., K}, so the side
length is N = 2K and the grid centre sits between the four cells (0,0), (0,1),
(1,0), (1,1). This centering makes the quarter-turn map (i, j) -> (j, 1-i) a
bijection of the index set, which the rotating-wave machinery relies on.

Arrays over the grid are stored with shape (N, N), row-major in i then j;
position [a, b] holds cell (a-K+1, b-K+1). `LatticeGrid.flat_index` gives the
equivalent offset into the raveled array.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Neighbour order used everywhere a per-neighbour quantity is enumerated:
# (i+1, j), (i-1, j), (i, j+1), (i, j-1).
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class Boundary(str, enum.Enum):
    """Truncation rule for neighbours that fall off the grid.

    NEUMANN replaces a missing neighbour with the cell itself, so every
    difference term against it vanishes. PERIODIC wraps indices modulo the
    side length.
    """

    NEUMANN = "neumann"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeGrid:
    half_width: int
    boundary: Boundary = Boundary.NEUMANN

    def __post_init__(self):
        if not isinstance(self.half_width, (int, np.integer)) or self.half_width < 1:
            raise ValueError(f"half_width must be a positive integer, got {self.half_width!r}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def side(self) -> int:
        return 2 * self.half_width

    @property
    def n_cells(self) -> int:
        return self.side * self.side

    @property
    def index_range(self) -> tuple[int, int]:
        """Inclusive (lo, hi) range of valid i and j."""
        return (-self.half_width + 1, self.half_width)

    def contains(self, cell: tuple[int, int]) -> bool:
        lo, hi = self.index_range
        i, j = cell
        return lo <= i <= hi and lo <= j <= hi

    def require_cell(self, cell: tuple[int, int]) -> None:
        if not self.contains(cell):
            raise IndexError(f"cell {cell} outside grid with half_width {self.half_width}")

    def flat_index(self, cell: tuple[int, int]) -> int:
        """Offset of (i, j) in the raveled row-major field array."""
        self.require_cell(cell)
        i, j = cell
        k = self.half_width
        return (i + k - 1) * self.side + (j + k - 1)

    def array_pos(self, cell: tuple[int, int]) -> tuple[int, int]:
        """(row, col) of a cell in the (N, N) field array."""
        self.require_cell(cell)
        i, j = cell
        k = self.half_width
        return (i + k - 1, j + k - 1)

    def cell_at(self, pos: tuple[int, int]) -> tuple[int, int]:
        """Inverse of `array_pos`."""
        a, b = pos
        k = self.half_width
        return (a - k + 1, b - k + 1)

    def axis_coords(self) -> np.ndarray:
        lo, hi = self.index_range
        return np.arange(lo, hi + 1)

    def coord_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(I, J) arrays of shape (N, N) holding each cell's lattice coordinates."""
        c = self.axis_coords()
        return np.meshgrid(c, c, indexing="ij")

    def _wrap(self, v: int) -> int:
        lo, _ = self.index_range
        return (v - lo) % self.side + lo

    def neighbours(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        """The four neighbours of a cell, boundary rule applied, in fixed order."""
        self.require_cell(cell)
        i, j = cell
        out = []
        for di, dj in DIRECTIONS:
            nb = (i + di, j + dj)
            if not self.contains(nb):
                if self.boundary is Boundary.PERIODIC:
                    nb = (self._wrap(nb[0]), self._wrap(nb[1]))
                else:
                    nb = cell
            out.append(nb)
        return out

    def shift(self, x: np.ndarray, di: int, dj: int) -> np.ndarray:
        """Array of neighbour values: out[cell] = x[cell + (di, dj)].

        Off-grid neighbours follow the boundary rule (self value for Neumann,
        wrap for periodic). Only unit offsets arise in practice but any |d|
        within the grid works for the periodic case.
        """
        if x.shape[:2] != (self.side, self.side):
            raise ValueError(f"field shape {x.shape} does not match side {self.side}")
        if self.boundary is Boundary.PERIODIC:
            out = x
            if di:
                out = np.roll(out, -di, axis=0)
            if dj:
                out = np.roll(out, -dj, axis=1)
            return out if out is not x else x.copy()
        out = np.empty_like(x)
        n = self.side
        src_i = np.clip(np.arange(n) + di, 0, n - 1)
        src_j = np.clip(np.arange(n) + dj, 0, n - 1)
        out[:] = x[np.ix_(src_i, src_j)]
        return out

    def neighbour_values(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        """Shifted copies of x for the four directions, in `DIRECTIONS` order."""
        return tuple(self.shift(x, di, dj) for di, dj in DIRECTIONS)

    def neighbour_flat_indices(self) -> np.ndarray:
        """Shape (4, N*N) array of flat neighbour indices per direction.

        Neumann boundary maps a missing neighbour back to the cell itself,
        matching `neighbours`.
        """
        n = self.side
        base = np.arange(n * n).reshape(n, n)
        out = np.empty((4, n * n), dtype=np.intp)
        for d, (di, dj) in enumerate(DIRECTIONS):
            out[d] = self.shift(base, di, dj).ravel()
        return out

    def interior_mask(self) -> np.ndarray:
        """True where a cell has four genuine neighbours."""
        n = self.side
        m = np.ones((n, n), dtype=bool)
        if self.boundary is Boundary.NEUMANN:
            m[0, :] = m[-1, :] = False
            m[:, 0] = m[:, -1] = False
        return m

    def boundary_band_mask(self, width: int) -> np.ndarray:
        """True within `width` cells of the truncation edge (empty for periodic)."""
        n = self.side
        m = np.zeros((n, n), dtype=bool)
        if self.boundary is Boundary.NEUMANN and width > 0:
            w = min(width, n)
            m[:w, :] = m[n - w:, :] = True
            m[:, :w] = m[:, n - w:] = True
        return m


def neighbour_sum_diff(x: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    """Sum of (neighbour - cell) over the four neighbours, per cell.

    The discrete Laplacian with unit weights; Neumann edges contribute zero
    difference terms by construction.
    """
    acc = None
    for nb in grid.neighbour_values(x):
        acc = (nb - x) if acc is None else acc + (nb - x)
    return acc


def _as_grid_array(grid: LatticeGrid, x, name: str, dtype=float) -> np.ndarray:
    a = np.asarray(x, dtype=dtype)
    n = grid.side
    if a.shape == (n * n,):
        a = a.reshape(n, n)
    if a.shape != (n, n):
        raise ValueError(f"{name} must have {n * n} entries, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class PolarField:
    """Amplitude/phase representation of a lattice state.

    r must be finite and nonnegative; theta finite (not necessarily wrapped).
    `zero_cells` flags cells whose phase was set by convention because the
    complex value was exactly zero.
    """

    grid: LatticeGrid
    r: np.ndarray
    theta: np.ndarray
    zero_cells: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        r = _as_grid_array(self.grid, self.r, "r")
        theta = _as_grid_array(self.grid, self.theta, "theta")
        if np.any(r < 0):
            raise ValueError("r must be nonnegative")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    def to_complex(self) -> "ComplexField":
        z = self.r * np.exp(1j * self.theta)
        return ComplexField(self.grid, z.real, z.imag)


@dataclass(frozen=True)
class ComplexField:
    """Real/imaginary representation of a lattice state."""

    grid: LatticeGrid
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "re", _as_grid_array(self.grid, self.re, "re"))
        object.__setattr__(self, "im", _as_grid_array(self.grid, self.im, "im"))

    @property
    def z(self) -> np.ndarray:
        return self.re + 1j * self.im

    @classmethod
    def from_z(cls, grid: LatticeGrid, z: np.ndarray) -> "ComplexField":
        z = np.asarray(z)
        return cls(grid, z.real.astype(float), z.imag.astype(float))

    def to_polar(self) -> PolarField:
        z = self.z
        r = np.abs(z)
        zero = r == 0.0
        theta = np.where(zero, 0.0, np.angle(z))
        return PolarField(self.grid, r, theta, zero_cells=zero if zero.any() else None)


def rotate_quarter(x: np.ndarray) -> np.ndarray:
    """Sample a field along the quarter-turn map: out[(i, j)] = x[(1-j, i)].

    Equivalently out[(j, 1-i)] = x[(i, j)]; on the centered grid the map is
    an exact permutation of cells, and applying it four times is the
    identity.
    """
    return np.rot90(x, -1)
