"""Random-waypoint motion for the single tracked target.

The target enters on the area boundary (or at a fixed point), walks straight
toward a uniformly drawn interior waypoint at a uniformly drawn speed, and
redraws waypoint and speed on arrival with no pause. Speeds are capped at
r_s / T so the target can never outrun a sensing disk in one slot.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass

from .errors import ConfigError, StateError
from .field import FieldConfig, Point, distance


@dataclass(frozen=True)
class MobilityConfig:
    v_min: float = 5.0          # m/s
    v_max: float = 20.0         # m/s; default leaves 20% prediction margin under r_s/T
    slot_duration: float = 1.0  # seconds per slot
    seed: int = 0
    entry_point: Point | None = None  # None: uniform point on a random edge

    def __post_init__(self) -> None:
        if self.slot_duration <= 0:
            raise ConfigError("slot duration must be positive")
        if not (0 < self.v_min <= self.v_max):
            raise ConfigError("need 0 < v_min <= v_max")


def validate_mobility(mc: MobilityConfig, fc: FieldConfig) -> None:
    """Reject speed ranges that break the per-slot displacement bound."""
    cap = fc.r_s / mc.slot_duration
    if mc.v_max > cap:
        raise ConfigError(
            f"v_max {mc.v_max} m/s exceeds r_s/T = {cap} m/s; the tracker's "
            "displacement bound would not hold"
        )


@dataclass(frozen=True)
class TargetState:
    pos: Point
    waypoint: Point
    speed: float      # m/s, constant until the waypoint is reached
    slot_index: int = 0
    inside: bool = True


def _draw_waypoint(fc: FieldConfig, rng: random.Random) -> Point:
    return Point(rng.uniform(0.0, fc.area_width), rng.uniform(0.0, fc.area_height))


def _draw_entry(fc: FieldConfig, rng: random.Random) -> Point:
    edge = rng.randrange(4)
    if edge == 0:
        return Point(rng.uniform(0.0, fc.area_width), 0.0)
    if edge == 1:
        return Point(rng.uniform(0.0, fc.area_width), fc.area_height)
    if edge == 2:
        return Point(0.0, rng.uniform(0.0, fc.area_height))
    return Point(fc.area_width, rng.uniform(0.0, fc.area_height))


def spawn_target(mc: MobilityConfig, fc: FieldConfig,
                 rng: random.Random | None = None) -> TargetState:
    """Place the target on its entry point with a first waypoint and speed."""
    validate_mobility(mc, fc)
    if rng is None:
        rng = random.Random(mc.seed)
    pos = mc.entry_point if mc.entry_point is not None else _draw_entry(fc, rng)
    waypoint = _draw_waypoint(fc, rng)
    speed = rng.uniform(mc.v_min, mc.v_max)
    return TargetState(pos=pos, waypoint=waypoint, speed=speed,
                       slot_index=0, inside=True)


def step_target(ts: TargetState, mc: MobilityConfig, fc: FieldConfig,
                rng: random.Random) -> TargetState:
    """Advance one slot toward the waypoint; redraw waypoint/speed on arrival.

    The per-slot displacement is min(speed*T, remaining distance), so it never
    exceeds speed*T and in particular never exceeds r_s.
    """
    if not ts.inside:
        raise StateError("cannot step a target that has exited the area")
    step = ts.speed * mc.slot_duration
    remaining = distance(ts.pos, ts.waypoint)
    if remaining <= step:
        # Arrive exactly at the waypoint, then pick the next leg (no pause).
        new_pos = ts.waypoint
        waypoint = _draw_waypoint(fc, rng)
        speed = rng.uniform(mc.v_min, mc.v_max)
    else:
        f = step / remaining
        new_pos = Point(ts.pos.x + (ts.waypoint.x - ts.pos.x) * f,
                        ts.pos.y + (ts.waypoint.y - ts.pos.y) * f)
        waypoint = ts.waypoint
        speed = ts.speed
    return TargetState(pos=new_pos, waypoint=waypoint, speed=speed,
                       slot_index=ts.slot_index + 1, inside=True)


def observed_speed(prev: Point, curr: Point, slot_duration: float) -> float:
    """Speed implied by two consecutive positions one slot apart."""
    if slot_duration <= 0:
        raise ValueError("slot duration must be positive")
    return distance(prev, curr) / slot_duration


@dataclass(frozen=True)
class TraceRow:
    """Target state at the start of a slot; speed is the leg speed in effect."""

    slot: int
    x: float
    y: float
    speed: float


def generate_trace(mc: MobilityConfig, fc: FieldConfig, n_slots: int) -> list[TraceRow]:
    """Full trajectory for a run: one row per slot, reproducible from mc.seed."""
    if n_slots < 1:
        raise ConfigError("need at least one slot")
    rng = random.Random(mc.seed)
    ts = spawn_target(mc, fc, rng)
    rows = [TraceRow(0, ts.pos.x, ts.pos.y, ts.speed)]
    for _ in range(n_slots - 1):
        ts = step_target(ts, mc, fc, rng)
        rows.append(TraceRow(ts.slot_index, ts.pos.x, ts.pos.y, ts.speed))
    return rows


def write_trace(path: str, rows: list[TraceRow]) -> int:
    """Write a trajectory CSV (slot,x,y,speed). Returns lines written."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "x", "y", "speed"])
        for r in rows:
            # repr round-trips floats exactly, so a re-imported trace replays
            # the identical motion for paired method comparisons
            writer.writerow([r.slot, repr(r.x), repr(r.y), repr(r.speed)])
    return len(rows) + 1


def read_trace(path: str) -> list[TraceRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [TraceRow(int(row["slot"]), float(row["x"]), float(row["y"]),
                         float(row["speed"]))
                for row in reader]
