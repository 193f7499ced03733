import math

import numpy as np
import pytest

from conftest import A_088, DEFICIT_200, line_grid
from wflo.farm_domain import TurbineSpec, make_square_grid
from wflo.wake import (
    InteractionMatrix,
    WakeParams,
    axial_induction,
    build_interaction_matrix,
    combined_speed,
    load_matrix,
    momentum_radius,
    save_matrix,
    single_wake_deficit,
    wake_length_scale,
)
from wflo.wind_resource import builtin_wr1, uniform_rose


class TestAxialInduction:
    def test_benchmark_thrust(self):
        a = axial_induction(0.88)
        assert a == pytest.approx(0.326795, abs=1e-6)
        # closed-form round trip: C_T = 4a(1-a)
        assert 4 * a * (1 - a) == pytest.approx(0.88, abs=1e-12)

    def test_exact_quarter(self):
        assert axial_induction(0.75) == pytest.approx(0.25, abs=1e-12)

    def test_small_thrust_limit(self):
        assert axial_induction(1e-9) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            axial_induction(bad)


class TestSingleWakeDeficit:
    def test_inline_200m(self, wake_params):
        # Wind from north: wake extends south. 2a/(1+1)^2 by hand.
        d = single_wake_deficit((0.0, 0.0), (0.0, -200.0), 0.0, wake_params, 20.0)
        assert d == pytest.approx(DEFICIT_200, abs=1e-9)
        assert d == pytest.approx(0.163397, abs=1e-6)

    def test_upwind_point_unaffected(self, wake_params):
        assert single_wake_deficit((0.0, 0.0), (0.0, 200.0), 0.0, wake_params, 20.0) == 0.0

    def test_outside_cone(self, wake_params):
        # d=200 -> cone radius 20 + 0.1*200 = 40 m; r = 45 m is outside.
        assert single_wake_deficit((0.0, 0.0), (45.0, -200.0), 0.0, wake_params, 20.0) == 0.0

    def test_on_cone_boundary_included(self, wake_params):
        assert single_wake_deficit((0.0, 0.0), (40.0, -200.0), 0.0, wake_params, 20.0) > 0.0

    def test_monotone_decay_downwind(self, wake_params):
        deficits = [
            single_wake_deficit((0.0, 0.0), (0.0, -d), 0.0, wake_params, 20.0)
            for d in (100.0, 200.0, 400.0, 800.0, 1600.0)
        ]
        assert all(a > b for a, b in zip(deficits, deficits[1:]))

    def test_direction_rotation(self, wake_params):
        # Wind from the east blows the wake westward.
        assert single_wake_deficit((0.0, 0.0), (-200.0, 0.0), 90.0, wake_params, 20.0) > 0.0
        assert single_wake_deficit((0.0, 0.0), (200.0, 0.0), 90.0, wake_params, 20.0) == 0.0

    def test_identical_points_rejected(self, wake_params):
        with pytest.raises(ValueError):
            single_wake_deficit((1.0, 1.0), (1.0, 1.0), 0.0, wake_params, 20.0)


class TestCombinedSpeed:
    def test_no_upstream(self, mosetti_spec, wake_params):
        grid = line_grid(3)
        u = combined_speed([], 1, builtin_wr1().states[0], grid, wake_params, 20.0)
        assert u == pytest.approx(12.0)

    def test_single_wake(self, wake_params):
        grid = line_grid(2)
        u = combined_speed([0], 1, builtin_wr1().states[0], grid, wake_params, 20.0)
        assert u == pytest.approx(12.0 * (1 - DEFICIT_200), abs=1e-9)
        assert u == pytest.approx(10.0392, abs=1e-3)

    def test_two_equal_wakes_combine_quadratically(self, wake_params):
        # Two upstream turbines, each alone causing the 200 m inline deficit.
        grid = line_grid(2)
        xs = np.array([-15.0, 15.0, 0.0])
        ys = np.array([200.0, 200.0, 0.0])
        d1 = single_wake_deficit((-15.0, 200.0), (0.0, 0.0), 0.0, wake_params, 20.0)
        d2 = single_wake_deficit((15.0, 200.0), (0.0, 0.0), 0.0, wake_params, 20.0)
        assert d1 == pytest.approx(DEFICIT_200, abs=1e-12)
        assert d2 == pytest.approx(DEFICIT_200, abs=1e-12)
        from wflo.farm_domain import FarmGrid

        g = FarmGrid(xs=xs, ys=ys, cell_side=30.0, bounds=(-30, -30, 30, 230))
        u = combined_speed([0, 1], 2, builtin_wr1().states[0], g, wake_params, 20.0)
        expected = 12.0 * (1 - math.sqrt(2 * DEFICIT_200 ** 2))
        assert u == pytest.approx(expected, abs=1e-9)
        assert u == pytest.approx(9.2271, abs=1e-3)

    def test_target_in_active_set_ignored(self, wake_params):
        grid = line_grid(2)
        u_with = combined_speed([0, 1], 1, builtin_wr1().states[0], grid, wake_params, 20.0)
        u_without = combined_speed([0], 1, builtin_wr1().states[0], grid, wake_params, 20.0)
        assert u_with == u_without

    def test_clamped_at_zero(self):
        params = WakeParams(decay=0.1, induction=0.49)
        xs = np.arange(40, dtype=float) * 0.0
        ys = np.arange(40, dtype=float) * -60.0
        from wflo.farm_domain import FarmGrid

        g = FarmGrid(xs=xs + np.arange(40) * 1e-6, ys=ys, cell_side=60.0, bounds=(0, -2400, 1, 60))
        u = combined_speed(list(range(39)), 39, builtin_wr1().states[0], g, params, 30.0)
        assert u >= 0.0


class TestInteractionMatrix:
    def test_two_cell_wr1_weights(self, mosetti_spec, wake_params):
        grid = line_grid(2)
        w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
        # Hand evaluation: probability 1, u0 = 12, deficit(200 m) squared.
        assert w.entries[0, 1] == pytest.approx(12.0 * DEFICIT_200 ** 2, rel=1e-12)
        assert w.entries[0, 1] == pytest.approx(0.3203848, abs=1e-6)
        assert w.entries[1, 0] == 0.0

    def test_symmetric_under_uniform_rose(self, mosetti_spec, wake_params):
        grid = make_square_grid(1000.0, 3)
        w = build_interaction_matrix(grid, uniform_rose(12.0, 4), mosetti_spec, wake_params)
        assert np.abs(w.entries - w.entries.T).max() < 1e-12

    def test_wr1_one_sided(self, mosetti_spec, wake_params):
        grid = make_square_grid(2000.0, 5)
        w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
        assert (w.entries * w.entries.T).max() == 0.0

    def test_wr1_triangular_under_downwind_order(self, mosetti_spec, wake_params):
        grid = make_square_grid(2000.0, 5)
        w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
        order = np.argsort(-grid.ys, kind="stable")  # north first (upwind first)
        permuted = w.entries[np.ix_(order, order)]
        assert np.tril(permuted, k=0).max() == 0.0

    def test_nonnegative_zero_diagonal(self, mosetti_spec, wake_params):
        grid = make_square_grid(900.0, 4)
        w = build_interaction_matrix(grid, uniform_rose(10.0, 8), mosetti_spec, wake_params)
        assert np.all(w.entries >= 0.0)
        assert np.all(np.diag(w.entries) == 0.0)

    def test_deterministic_rebuild(self, mosetti_spec, wake_params):
        grid = make_square_grid(1500.0, 4)
        rose = uniform_rose(12.0, 12)
        w1 = build_interaction_matrix(grid, rose, mosetti_spec, wake_params)
        w2 = build_interaction_matrix(grid, rose, mosetti_spec, wake_params)
        assert np.array_equal(w1.entries, w2.entries)

    def test_induction_derived_from_thrust(self, mosetti_spec):
        grid = line_grid(2)
        derived = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, WakeParams(decay=0.1))
        explicit = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, WakeParams(decay=0.1, induction=A_088))
        assert np.allclose(derived.entries, explicit.entries, rtol=0, atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError, match="diagonal"):
            InteractionMatrix(entries=np.ones((2, 2)))
        with pytest.raises(ValueError, match="nonnegative"):
            InteractionMatrix(entries=np.array([[0.0, -1.0], [0.0, 0.0]]))

    def test_dump_round_trip(self, tmp_path, mosetti_spec, wake_params):
        grid = make_square_grid(1000.0, 3)
        w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
        path = tmp_path / "w.csv"
        save_matrix(w, path)
        again = load_matrix(path)
        assert np.array_equal(w.entries, again.entries)


class TestWakeSeedPolicies:
    def test_momentum_radius(self):
        r1 = momentum_radius(20.0, A_088)
        assert r1 == pytest.approx(20.0 * math.sqrt((1 - A_088) / (1 - 2 * A_088)), rel=1e-12)
        assert r1 == pytest.approx(27.881, abs=1e-3)

    def test_length_scale_policy(self, wake_params):
        assert wake_length_scale(20.0, A_088, wake_params) == 20.0
        momentum = WakeParams(decay=0.1, induction=A_088, seed="momentum")
        assert wake_length_scale(20.0, A_088, momentum) > 20.0

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError, match="seed"):
            WakeParams(decay=0.1, seed="banana")
