"""Random-waypoint motion: bounds, kinematics, determinism, trace round-trips."""

import random

import pytest

from wsn_track_sim import (ConfigError, FieldConfig, MobilityConfig, Point,
                           StateError, TargetState, distance, generate_trace,
                           observed_speed, read_trace, spawn_target,
                           step_target, write_trace)

FC = FieldConfig()  # 500x500, r_s 25


class TestSpawn:
    def test_fixed_entry(self):
        mc = MobilityConfig(entry_point=Point(0, 250), seed=1)
        ts = spawn_target(mc, FC)
        assert ts.pos == Point(0, 250)
        assert ts.inside and ts.slot_index == 0

    def test_speed_at_bound_accepted(self):
        mc = MobilityConfig(v_min=20, v_max=20, slot_duration=1.0, seed=0)
        ts = spawn_target(mc, FC)
        assert ts.speed == 20.0  # 20 <= r_s/T = 25

    def test_speed_above_bound_rejected(self):
        mc = MobilityConfig(v_min=30, v_max=30, slot_duration=1.0, seed=0)
        with pytest.raises(ConfigError):
            spawn_target(mc, FC)

    def test_random_edge_entry_is_on_boundary(self):
        for seed in range(30):
            ts = spawn_target(MobilityConfig(seed=seed), FC)
            on_edge = (ts.pos.x in (0.0, 500.0)) or (ts.pos.y in (0.0, 500.0))
            assert on_edge

    def test_waypoint_inside_area(self):
        ts = spawn_target(MobilityConfig(seed=3), FC)
        assert 0 <= ts.waypoint.x <= 500 and 0 <= ts.waypoint.y <= 500


class TestStep:
    def test_straight_line(self):
        mc = MobilityConfig(seed=0)
        ts = TargetState(pos=Point(0, 0), waypoint=Point(100, 0), speed=20.0)
        nxt = step_target(ts, mc, FC, random.Random(0))
        assert nxt.pos == Point(20.0, 0.0)
        assert nxt.slot_index == 1
        assert nxt.waypoint == ts.waypoint and nxt.speed == ts.speed

    def test_arrival_redraws(self):
        mc = MobilityConfig(seed=0)
        ts = TargetState(pos=Point(0, 0), waypoint=Point(10, 0), speed=20.0)
        nxt = step_target(ts, mc, FC, random.Random(5))
        assert nxt.pos == Point(10.0, 0.0)
        assert nxt.waypoint != ts.waypoint
        assert MobilityConfig().v_min <= nxt.speed <= MobilityConfig().v_max

    def test_exited_target_rejected(self):
        ts = TargetState(pos=Point(0, 0), waypoint=Point(1, 1), speed=5.0,
                         inside=False)
        with pytest.raises(StateError):
            step_target(ts, MobilityConfig(), FC, random.Random(0))

    def test_displacement_bound_over_trace(self):
        rows = generate_trace(MobilityConfig(seed=17), FC, 12_000)
        for a, b in zip(rows, rows[1:]):
            step = distance(Point(a.x, a.y), Point(b.x, b.y))
            assert step <= FC.r_s + 1e-9
            assert step <= a.speed * 1.0 + 1e-9


class TestObservedSpeed:
    def test_simple(self):
        assert observed_speed(Point(0, 0), Point(20, 0), 1.0) == 20.0

    def test_stationary(self):
        assert observed_speed(Point(5, 5), Point(5, 5), 1.0) == 0.0

    def test_rejects_bad_duration(self):
        with pytest.raises(ValueError):
            observed_speed(Point(0, 0), Point(1, 0), 0.0)

    def test_bounded_along_trace(self):
        rows = generate_trace(MobilityConfig(seed=23), FC, 10_000)
        cap = FC.r_s / 1.0
        for a, b in zip(rows, rows[1:]):
            assert observed_speed(Point(a.x, a.y), Point(b.x, b.y), 1.0) <= cap + 1e-9


class TestTrace:
    def test_equal_seeds_identical(self):
        a = generate_trace(MobilityConfig(seed=5), FC, 300)
        b = generate_trace(MobilityConfig(seed=5), FC, 300)
        assert a == b

    def test_different_seeds_differ(self):
        a = generate_trace(MobilityConfig(seed=5), FC, 50)
        b = generate_trace(MobilityConfig(seed=6), FC, 50)
        assert a != b

    def test_piecewise_linear_legs(self):
        # between waypoint arrivals the observed speed equals the leg speed
        rows = generate_trace(MobilityConfig(seed=9), FC, 2000)
        for a, b, c in zip(rows, rows[1:], rows[2:]):
            if a.speed == b.speed == c.speed:
                v1 = observed_speed(Point(a.x, a.y), Point(b.x, b.y), 1.0)
                assert v1 == pytest.approx(a.speed, rel=1e-9)

    def test_csv_round_trip(self, tmp_path):
        rows = generate_trace(MobilityConfig(seed=2), FC, 120)
        path = tmp_path / "trace.csv"
        lines = write_trace(str(path), rows)
        assert lines == 121
        assert read_trace(str(path)) == rows
