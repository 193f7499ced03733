import math

import numpy as np
import pytest

from wflo.farm_domain import (
    ProximityPairs,
    ThrustCurve,
    TurbineSpec,
    make_square_grid,
    proximity_pairs,
)


class TestMakeSquareGrid:
    @pytest.mark.parametrize(
        "area,cells,side",
        [(7000.0, 10, 700.0), (7000.0, 50, 140.0), (2000.0, 10, 200.0)],
    )
    def test_benchmark_resolutions(self, area, cells, side):
        grid = make_square_grid(area, cells)
        assert grid.n == cells * cells
        assert grid.cell_side == pytest.approx(side)

    def test_row_major_from_south_west(self):
        grid = make_square_grid(200.0, 2)
        assert grid.cells == [
            (0, 50.0, 50.0),
            (1, 150.0, 50.0),
            (2, 50.0, 150.0),
            (3, 150.0, 150.0),
        ]

    def test_zero_cells(self):
        with pytest.raises(ValueError):
            make_square_grid(1000.0, 0)

    def test_bad_area(self):
        with pytest.raises(ValueError):
            make_square_grid(0.0, 4)


class TestProximityPairs:
    def test_700m_grid_is_unconstrained(self):
        grid = make_square_grid(7000.0, 10)
        spec = TurbineSpec(rotor_radius=63.0)
        assert len(proximity_pairs(grid, spec)) == 0

    def test_350m_grid_is_unconstrained(self):
        grid = make_square_grid(7000.0, 20)
        spec = TurbineSpec(rotor_radius=63.0)
        assert len(proximity_pairs(grid, spec)) == 0

    def test_140m_grid_offsets(self):
        # 5R = 315 m on a 140 m grid: offsets (1,0), (1,1), (2,0), (2,1) are
        # excluded; (2,2) and (3,0) are not. Distances by direct computation.
        grid = make_square_grid(7000.0, 50)
        spec = TurbineSpec(rotor_radius=63.0)
        pairs = proximity_pairs(grid, spec)
        assert pairs.min_separation == pytest.approx(315.0)
        excluded = set(pairs.pairs)

        def cell(row, col):
            return row * 50 + col

        anchor = cell(10, 10)
        for (dr, dc), expect in {
            (0, 1): True,    # 140 m
            (1, 1): True,    # ~197.99 m
            (0, 2): True,    # 280 m
            (1, 2): True,    # ~313.05 m
            (2, 2): False,   # ~395.98 m
            (0, 3): False,   # 420 m
        }.items():
            other = cell(10 + dr, 10 + dc)
            pair = (min(anchor, other), max(anchor, other))
            assert (pair in excluded) == expect, (dr, dc)

    def test_symmetric_storage_canonical(self):
        grid = make_square_grid(400.0, 3)
        spec = TurbineSpec(rotor_radius=50.0)
        pairs = proximity_pairs(grid, spec)
        assert all(i < j for i, j in pairs.pairs)
        assert len(set(pairs.pairs)) == len(pairs.pairs)

    def test_boundary_distance_allowed(self):
        # Exactly 5R apart is permitted (strict inequality for exclusion).
        grid = make_square_grid(400.0, 2)  # spacing 200 m
        spec = TurbineSpec(rotor_radius=40.0)  # 5R = 200 m
        pairs = proximity_pairs(grid, spec)
        assert ((0, 1) not in pairs.pairs) and ((0, 2) not in pairs.pairs)
        assert len(pairs) == 0

    def test_zero_min_separation(self):
        grid = make_square_grid(400.0, 3)
        pairs = ProximityPairs(pairs=(), min_separation=0.0)
        assert len(pairs) == 0
        assert pairs.adjacency(grid.n).sum() == 0

    def test_duplicate_pair_rejected(self):
        with pytest.raises(ValueError, match="twice"):
            ProximityPairs(pairs=((0, 1), (1, 0)), min_separation=10.0)


class TestTurbineSpec:
    def test_constant_thrust(self):
        spec = TurbineSpec(rotor_radius=20.0, thrust=0.88)
        assert spec.thrust_at(5.0) == 0.88
        assert spec.thrust_at(20.0) == 0.88

    def test_thrust_bounds(self):
        with pytest.raises(ValueError, match="thrust"):
            TurbineSpec(rotor_radius=20.0, thrust=1.0)

    def test_rotor_radius_positive(self):
        with pytest.raises(ValueError, match="radius"):
            TurbineSpec(rotor_radius=0.0)

    def test_thrust_curve(self, tmp_path):
        path = tmp_path / "thrust.csv"
        path.write_text("speed_ms,value\n4,0.8\n12,0.7\n20,0.3\n")
        curve = ThrustCurve.from_csv(path)
        spec = TurbineSpec(rotor_radius=63.0, thrust=curve)
        assert spec.thrust_at(4.0) == pytest.approx(0.8)
        assert spec.thrust_at(8.0) == pytest.approx(0.75)
        assert spec.thrust_at(25.0) == pytest.approx(0.3)  # clamped past table end

    def test_thrust_curve_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            ThrustCurve(speeds=np.array([5.0, 5.0]), values=np.array([0.5, 0.5]))
        with pytest.raises(ValueError, match="strictly"):
            ThrustCurve(speeds=np.array([5.0, 6.0]), values=np.array([0.5, 1.2]))
