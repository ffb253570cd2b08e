import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from geometry.cellset import CellSet, dilate, hausdorff
from geometry.grid import Grid
from geometry.space import Space, distance
from utils.errors import ConfigurationError, ContractError, DomainError, GridMismatchError


vectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


class TestSpace:
    """Canonical points and metrics"""

    def test_bad_bounds_rejected(self):
        """Intervals need a < b, boxes need 4 ordered bounds"""
        with pytest.raises(ConfigurationError):
            Space.interval(1.0, 1.0)
        with pytest.raises(ConfigurationError):
            Space.box2(0.0, 1.0, 2.0, 1.0)
        with pytest.raises(ConfigurationError):
            Space("torus")

    def test_circle_wraps_angles(self):
        """Angles are reduced into [0, 2pi)"""
        pts = Space.circle().canonical([-0.5, 2.0 * math.pi + 0.25])
        assert pts[:, 0] == pytest.approx([2.0 * math.pi - 0.5, 0.25])

    def test_circle_distance_goes_the_short_way(self):
        """Arc distance across angle 0"""
        assert distance(Space.circle(), 0.1, 2.0 * math.pi - 0.1) == pytest.approx(0.2)

    def test_zero_homogeneous_vector(self):
        """[0:0:0] is not a point of the projective plane"""
        with pytest.raises(DomainError):
            Space.projective_plane().canonical([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def test_projective_first_coordinate_positive(self):
        """Representatives are unit vectors with the first nonzero coordinate positive"""
        p = Space.projective_plane().canonical([0.0, -3.0, 4.0])
        assert p[0] == pytest.approx([0.0, 0.6, -0.8])

    def test_riemann_sphere_zero_and_infinity(self):
        """[0:1] and [1:0] are antipodal on the sphere"""
        assert distance(Space.riemann_sphere(), [0j, 1 + 0j], [1 + 0j, 0j]) == pytest.approx(2.0)

    @given(vectors)
    @hsettings(max_examples=100, deadline=None)
    def test_projective_canonical_is_idempotent(self, v):
        """canonical(canonical(p)) = canonical(p), and p ~ -p"""
        space = Space.projective_plane()
        p = space.canonical(v)
        assert np.allclose(space.canonical(p), p)
        assert distance(space, v, [-c for c in v]) == pytest.approx(0.0, abs=1e-12)


class TestGrid:
    """Cell grids and adjacency"""

    def test_resolution_checks(self):
        """Wrong axis count, tiny axes and odd projective azimuth are rejected"""
        with pytest.raises(ConfigurationError):
            Grid(Space.interval(0.0, 1.0), (8, 8))
        with pytest.raises(ConfigurationError):
            Grid(Space.circle(), (1,))
        with pytest.raises(ConfigurationError):
            Grid(Space.projective_plane(), (8, 7))

    def test_interval_cells(self):
        """Eight equal cells with centers (k + 1/2)/8"""
        grid = Grid(Space.interval(0.0, 1.0), (8,))
        assert grid.size == 8
        assert grid.centers[:, 0] == pytest.approx((np.arange(8) + 0.5) / 8)
        assert grid.cell_width == pytest.approx(0.125)

    def test_circle_wraps_around(self):
        """The last arc touches the first"""
        grid = Grid(Space.circle(), (8,))
        assert grid.neighbors[7, 0] == 1
        assert grid.neighbors[0, 7] == 1

    def test_interval_does_not_wrap(self):
        """End cells of an interval have one neighbor"""
        grid = Grid(Space.interval(0.0, 1.0), (8,))
        assert grid.neighbors[0].nnz == 1
        assert grid.neighbors[7, 0] == 0

    def test_points_outside_interval_are_flagged(self):
        """Out-of-domain points clip to the end cell and are reported"""
        grid = Grid(Space.interval(0.0, 1.0), (4,))
        cells, outside = grid.locate([0.1, 1.5, 1.0])
        assert cells.tolist() == [0, 3, 3]
        assert outside.tolist() == [False, True, False]

    def test_projective_equator_seam(self):
        """Equator cell j is adjacent to equator cell j + n/2"""
        grid = Grid(Space.projective_plane(), (8, 16))
        last = 7 * 16
        assert grid.neighbors[last + 2, last + 10] == 1
        assert grid.neighbors[last + 2, last + 9] == 1

    def test_projective_polar_band_is_one_neighborhood(self):
        """Cells around the pole all touch each other"""
        grid = Grid(Space.projective_plane(), (8, 16))
        assert grid.neighbors[0, 8] == 1

    def test_hash_identifies_grid(self):
        """Equal parameters give equal grids"""
        a = Grid(Space.interval(0.0, 1.0), (8,))
        assert a == Grid(Space.interval(0.0, 1.0), (8,))
        assert a != Grid(Space.interval(0.0, 1.0), (16,))


class TestCellSet:
    """Exact set algebra over one grid"""

    @pytest.fixture
    def grid(self):
        return Grid(Space.interval(0.0, 1.0), (8,))

    def test_algebra(self, grid):
        """Union, intersection, difference and complement"""
        a = CellSet.from_indices(grid, [0, 1, 2])
        b = CellSet.from_indices(grid, [2, 3])
        assert (a | b).indices.tolist() == [0, 1, 2, 3]
        assert (a & b).indices.tolist() == [2]
        assert (a - b).indices.tolist() == [0, 1]
        assert (~a).indices.tolist() == [3, 4, 5, 6, 7]
        assert a & b <= a
        assert not a <= b

    def test_mixing_grids_fails(self, grid):
        """Operations across grids raise GridMismatchError"""
        other = Grid(Space.interval(0.0, 1.0), (16,))
        with pytest.raises(GridMismatchError):
            CellSet.full(grid) | CellSet.full(other)

    def test_covering(self, grid):
        """Cells meeting [0.3, 0.6] on four cells of [0, 1]"""
        g4 = Grid(Space.interval(0.0, 1.0), (4,))
        assert CellSet.covering(g4, [0.3], [0.6]).indices.tolist() == [1, 2]

    def test_csv_round_trip(self, grid, tmp_path):
        """A set written to CSV reads back equal, and only on its own grid"""
        s = CellSet.from_indices(grid, [1, 4, 6])
        path = tmp_path / "s.csv"
        s.to_csv(path)
        assert CellSet.from_csv(path, grid) == s
        with pytest.raises(GridMismatchError):
            CellSet.from_csv(path, Grid(Space.interval(0.0, 1.0), (16,)))


class TestDilateAndHausdorff:
    """Metric operations on cell sets"""

    @pytest.fixture
    def grid(self):
        return Grid(Space.interval(0.0, 1.0), (8,))

    def test_dilate_zero_is_identity(self, grid):
        s = CellSet.from_indices(grid, [3])
        assert dilate(grid, s, 0.0) == s

    def test_dilate_one_width(self, grid):
        """One cell width reaches exactly the adjacent cells"""
        s = CellSet.from_indices(grid, [3])
        assert dilate(grid, s, grid.cell_width).indices.tolist() == [2, 3, 4]

    def test_dilate_wraps_on_circle(self):
        grid = Grid(Space.circle(), (8,))
        s = CellSet.from_indices(grid, [0])
        assert dilate(grid, s, grid.cell_width).indices.tolist() == [0, 1, 7]

    def test_negative_radius(self, grid):
        with pytest.raises(ContractError):
            dilate(grid, CellSet.full(grid), -1.0)

    def test_hausdorff(self, grid):
        """Distance between centers; zero for equal sets"""
        a = CellSet.from_indices(grid, [0])
        b = CellSet.from_indices(grid, [3])
        assert hausdorff(grid, a, b) == pytest.approx(0.375)
        assert hausdorff(grid, a | b, a | b) == 0.0
        assert hausdorff(grid, a, a | b) == pytest.approx(0.375)

    def test_hausdorff_of_empty_set(self, grid):
        with pytest.raises(DomainError):
            hausdorff(grid, CellSet.empty(grid), CellSet.full(grid))
