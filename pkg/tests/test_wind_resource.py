import math

import pytest

from wflo.wind_resource import (
    WindRose,
    WindState,
    builtin_wr1,
    builtin_wr36,
    load_rose,
    save_rose,
    uniform_rose,
)


def write_rose(tmp_path, rows):
    path = tmp_path / "rose.csv"
    lines = ["speed_ms,direction_deg,probability"] + [f"{s},{d},{p}" for s, d, p in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadRose:
    def test_single_state(self, tmp_path):
        rose = load_rose(write_rose(tmp_path, [(12.0, 0.0, 1.0)]))
        assert rose.n_states == 1
        assert rose.states[0].speed == 12.0
        assert math.isclose(sum(s.probability for s in rose.states), 1.0)

    def test_108_states(self, tmp_path):
        rows = []
        p = 1.0 / 108
        for speed in (8.0, 12.0, 17.0):
            for k in range(36):
                rows.append((speed, 10.0 * k, p))
        rose = load_rose(write_rose(tmp_path, rows))
        assert rose.n_states == 108

    def test_bad_probability_sum(self, tmp_path):
        path = write_rose(tmp_path, [(12.0, 0.0, 0.5), (12.0, 90.0, 0.3)])
        with pytest.raises(ValueError, match="renormalize"):
            load_rose(path)

    def test_renormalizes_tiny_drift(self, tmp_path):
        path = write_rose(tmp_path, [(12.0, 0.0, 0.5 + 2e-7), (12.0, 90.0, 0.5)])
        rose = load_rose(path)
        assert math.isclose(sum(s.probability for s in rose.states), 1.0, abs_tol=1e-12)

    def test_duplicate_state(self, tmp_path):
        path = write_rose(tmp_path, [(12.0, 0.0, 0.5), (12.0, 0.0, 0.5)])
        with pytest.raises(ValueError, match="duplicate"):
            load_rose(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "rose.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            load_rose(path)

    def test_round_trip(self, tmp_path):
        rose = uniform_rose(9.5, 7)
        path = tmp_path / "out.csv"
        save_rose(rose, path)
        again = load_rose(path)
        assert again.states == rose.states


class TestStateValidation:
    def test_negative_speed(self):
        with pytest.raises(ValueError, match="speed"):
            WindState(speed=-1.0, direction=0.0, probability=1.0)

    def test_direction_range(self):
        with pytest.raises(ValueError, match="direction"):
            WindState(speed=10.0, direction=360.0, probability=1.0)

    def test_probability_range(self):
        with pytest.raises(ValueError, match="probability"):
            WindState(speed=10.0, direction=0.0, probability=1.5)


class TestBuiltins:
    def test_wr1(self):
        rose = builtin_wr1()
        assert rose.n_states == 1
        state = rose.states[0]
        assert state.speed == 12.0
        assert state.direction == 0.0
        assert state.probability == 1.0

    def test_wr1_direction_count(self):
        assert len(set(builtin_wr1().directions())) == 1

    def test_wr36_shape(self):
        rose = builtin_wr36()
        assert rose.n_states == 108
        assert set(rose.speeds()) == {8.0, 12.0, 17.0}
        assert len(set(rose.directions())) == 36
        assert math.isclose(sum(s.probability for s in rose.states), 1.0, abs_tol=1e-9)


class TestUniformRose:
    def test_equal_probabilities(self):
        rose = uniform_rose(12.0, 36)
        assert rose.n_states == 36
        assert all(math.isclose(s.probability, 1.0 / 36) for s in rose.states)

    def test_single_direction_matches_wr1(self):
        assert uniform_rose(12.0, 1).states == builtin_wr1().states

    def test_zero_directions(self):
        with pytest.raises(ValueError):
            uniform_rose(12.0, 0)

    @pytest.mark.parametrize("n", [3, 4, 9, 36])
    def test_rotation_invariance(self, n):
        rose = uniform_rose(11.0, n)
        step = 360.0 / n
        rotated = {(s.speed, (s.direction + step) % 360.0, round(s.probability, 15)) for s in rose.states}
        original = {(s.speed, s.direction, round(s.probability, 15)) for s in rose.states}
        assert rotated == original


def test_probabilities_always_sum_to_one():
    for rose in (builtin_wr1(), uniform_rose(8.0, 13), builtin_wr36()):
        assert abs(math.fsum(s.probability for s in rose.states) - 1.0) <= 1e-9
