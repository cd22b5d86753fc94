"""Per-slot tracking state machine.

Each slot: awake nodes sense; detectors elect the lowest-id representative
and rank the two closest nodes; the representative pushes an observation
notice through the MAC to the pair; the pair broadcast wake messages into the
predicted region; everyone not needed goes back to sleep. An empty detector
set while tracking means the target is lost and the whole field sleeps.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .errors import StateError
from .field import (NodeField, NodeMode, Point, detectors_of, distance,
                    k_closest, neighbors_of)
from .mac import Frame, FrameKind, MacService, SlotOutcome, on_air_bits
from .mobility import observed_speed


class Episode(Enum):
    IDLE = "idle"          # target not yet acquired; whole field senses
    TRACKING = "tracking"
    LOST = "lost"
    EXITED = "exited"


@dataclass(frozen=True)
class PredictedRegion:
    """Where the target can be next slot: a disk around the position estimate."""

    center: Point
    radius: float

    def contains(self, p: Point) -> bool:
        # boundary-inclusive with a hair of float slack: a target moving at
        # exactly radius/T per slot lands on the rim
        return distance(self.center, p) <= self.radius + 1e-9 * max(self.radius, 1.0)


@dataclass(frozen=True)
class ClosestPair:
    """The one or two detectors nearest the target, with their ranges."""

    i: int
    d_i: float
    j: int | None = None
    d_j: float | None = None

    def __post_init__(self) -> None:
        if self.j is not None:
            if self.j == self.i:
                raise ValueError("pair members must differ")
            if self.d_j is None or self.d_j < self.d_i:
                raise ValueError("pair must be ordered d_i <= d_j")

    def ids(self) -> tuple[int, ...]:
        return (self.i,) if self.j is None else (self.i, self.j)


@dataclass(frozen=True)
class TrackerState:
    episode: Episode = Episode.IDLE
    detectors: frozenset[int] = frozenset()
    representative: int | None = None
    closest: ClosestPair | None = None
    predicted: PredictedRegion | None = None
    est_pos: Point | None = None
    est_speed: float = 0.0


class EventKind(Enum):
    WAKE_SENT = "wake_sent"
    OBSERVATION_NOTICE = "observation_notice"
    NODES_SLEPT = "nodes_slept"
    TARGET_LOST = "target_lost"
    TARGET_EXITED = "target_exited"


@dataclass(frozen=True)
class ProtocolEvent:
    kind: EventKind
    slot: int
    ids: tuple[int, ...] = ()


def elect_representative(detectors) -> int:
    """Lowest id among the detectors."""
    if not detectors:
        raise StateError("cannot elect a representative from an empty detector set")
    return min(detectors)


def estimate_position(field: NodeField, pair: ClosestPair) -> Point:
    """Locate the target from the two nearest detectors and their ranges.

    Interpolates between the anchors with weights inverse to their ranges
    (the closer node pulls harder); a single anchor or two zero ranges give
    the anchor position itself.
    """
    a = field.node(pair.i).pos
    if pair.j is None:
        return a
    b = field.node(pair.j).pos
    total = pair.d_i + pair.d_j
    if total == 0:
        return a
    w_a = pair.d_j / total
    w_b = pair.d_i / total
    return Point(a.x * w_a + b.x * w_b, a.y * w_a + b.y * w_b)


def predicted_region(est_pos: Point, est_speed: float, slot_duration: float,
                     r_s: float, alpha: float = 1.5,
                     floor_frac: float = 0.1) -> PredictedRegion:
    """Disk the target can reach next slot: radius alpha*speed*T, floored and capped.

    The cap at r_s is tight because the target's speed never exceeds r_s/T;
    the floor keeps a stationary target inside a usable region.
    """
    if est_speed < 0:
        raise ValueError("speed estimate must be non-negative")
    radius = min(max(alpha * est_speed * slot_duration, floor_frac * r_s), r_s)
    return PredictedRegion(center=est_pos, radius=radius)


def wake_set(field: NodeField, region: PredictedRegion) -> set[int]:
    """Alive nodes whose sensing disk intersects the region (inclusive).

    These are exactly the nodes that could sense the target anywhere inside
    the predicted disk.
    """
    reach = region.radius + field.config.r_s
    return {n.id for n in field.nodes
            if n.alive and distance(n.pos, region.center) <= reach}


@dataclass
class StepResult:
    tracker: TrackerState
    events: list[ProtocolEvent]
    transitions: dict[int, tuple[NodeMode, NodeMode]]  # end-of-slot mode changes
    slot_modes: dict[int, NodeMode]                    # mode held during the slot body
    outcomes: list[SlotOutcome]
    woken: set[int]            # pulled out of sleep by a wake message (one-shot cost)
    detectors: set[int]
    wake_targets: set[int]     # nodes that actually received a wake message
    frames_sent: int = 0


def tracking_step(tracker: TrackerState, field: NodeField,
                  true_target: Point | None, mac: MacService, slot: int, *,
                  alpha: float = 1.5, radius_floor_frac: float = 0.1,
                  speed_prior: float | None = None) -> StepResult:
    """Advance the protocol by one slot; mutates node modes to their end-of-slot values.

    `true_target` is ground truth: nodes only see it through in-range sensing
    and the ranges their sensors measure. None means the target left the area.
    """
    cfg = mac.cfg
    events: list[ProtocolEvent] = []
    transitions: dict[int, tuple[NodeMode, NodeMode]] = {}
    outcomes: list[SlotOutcome] = []
    woken: set[int] = set()
    r_s = field.config.r_s

    def set_mode(node, new_mode):
        if node.mode != new_mode:
            transitions[node.id] = (node.mode, new_mode)
            node.mode = new_mode

    def sleep_everyone():
        slept = []
        for n in field.alive_nodes():
            if n.mode != NodeMode.SLEEP:
                slept.append(n.id)
                set_mode(n, NodeMode.SLEEP)
        return slept

    # target left the area: episode over, field powers down
    if true_target is None:
        slot_modes = {n.id: n.mode for n in field.alive_nodes()}
        slept = sleep_everyone()
        events.append(ProtocolEvent(EventKind.TARGET_EXITED, slot))
        if slept:
            events.append(ProtocolEvent(EventKind.NODES_SLEPT, slot, tuple(sorted(slept))))
        return StepResult(TrackerState(episode=Episode.EXITED), events, transitions,
                          slot_modes, outcomes, woken, set(), set())

    # acquisition: until the target is first seen, the whole field senses
    if tracker.episode is Episode.IDLE:
        for n in field.alive_nodes():
            if n.mode is not NodeMode.DETECT:
                set_mode(n, NodeMode.DETECT)

    slot_modes = {n.id: n.mode for n in field.alive_nodes()}
    awake = {nid for nid, m in slot_modes.items() if m is not NodeMode.SLEEP}
    dets = detectors_of(field, true_target) & awake

    if not dets:
        if tracker.episode is Episode.TRACKING:
            # nobody reported: the previous pair conclude the target is gone
            lost_ids = tracker.closest.ids() if tracker.closest else ()
            slept = sleep_everyone()
            events.append(ProtocolEvent(EventKind.TARGET_LOST, slot, lost_ids))
            if slept:
                events.append(ProtocolEvent(EventKind.NODES_SLEPT, slot,
                                            tuple(sorted(slept))))
            return StepResult(TrackerState(episode=Episode.LOST), events, transitions,
                              slot_modes, outcomes, woken, set(), set())
        # Idle keeps sensing; Lost/Exited stay dormant
        return StepResult(tracker, events, transitions, slot_modes, outcomes,
                          woken, set(), set())

    # --- detection succeeded: elect, rank, estimate, predict ---
    rep = elect_representative(dets)
    order = k_closest(field, true_target, 2, dets)
    i = order[0]
    j = order[1] if len(order) > 1 else None
    d_i = distance(field.node(i).pos, true_target)
    d_j = distance(field.node(j).pos, true_target) if j is not None else None
    pair = ClosestPair(i, d_i, j, d_j)

    est = estimate_position(field, pair)
    # speed from consecutive fixes is only meaningful when both fixes were
    # two-anchor interpolations; a single-anchor fix sits on the anchor itself
    # and would fake a stationary target
    prev_two_anchor = tracker.closest is not None and tracker.closest.j is not None
    if (tracker.episode is Episode.TRACKING and tracker.est_pos is not None
            and prev_two_anchor and pair.j is not None):
        est_speed = observed_speed(tracker.est_pos, est, cfg.slot_duration)
    else:
        # first tracking slot or degenerate fix: assume the worst the bound allows
        est_speed = speed_prior if speed_prior is not None else r_s / cfg.slot_duration
    region = predicted_region(est, est_speed, cfg.slot_duration, r_s,
                              alpha, radius_floor_frac)
    wset = wake_set(field, region)

    # observation notice: one data transmission from the representative to the
    # nearest pair member; the other pair member overhears the same frame
    recipients = [nid for nid in pair.ids() if nid != rep]
    frames_sent = 0
    notice_ok = True
    if recipients:
        frame = Frame(rep, recipients[0], FrameKind.OBSERVATION_NOTICE,
                      cfg.data_packet_bits, slot)
        frames_sent = 1
        window_outs, _dropped = mac.data_window({rep: deque([frame])}, slot)
        outcomes.extend(window_outs)
        notice_ok = any(f is frame for out in window_outs for f, _ in out.delivered)
        if notice_ok:
            for out in window_outs:
                if any(f is frame for f, _ in out.delivered):
                    for extra in recipients[1:]:
                        out.add_rx(extra, rep, on_air_bits(frame, cfg))
                    break
    if notice_ok:
        events.append(ProtocolEvent(EventKind.OBSERVATION_NOTICE, slot,
                                    tuple(sorted({rep, *recipients}))))

    # wake messages: informed pair members broadcast into the predicted region
    senders = [nid for nid in pair.ids() if notice_ok or nid == rep]
    wake_targets: set[int] = set()
    control = SlotOutcome(slot=slot)
    for s in senders:
        targets = sorted((wset & neighbors_of(field, s)) - set(senders))
        if not targets:
            continue
        far = max(targets, key=lambda t: (distance(field.node(t).pos,
                                                   field.node(s).pos), t))
        control.add_tx(s, far, cfg.control_packet_bits)
        for t in targets:
            control.add_rx(t, s, cfg.control_packet_bits)
        wake_targets.update(targets)
    if control.records:
        outcomes.append(control)
    if wake_targets:
        events.append(ProtocolEvent(EventKind.WAKE_SENT, slot,
                                    tuple(sorted(wake_targets))))

    # end-of-slot schedule: detectors monitor, wake recipients (and anyone
    # already awake inside the region that heard the call) detect, rest sleep
    keep_awake = dets | wake_targets | set(pair.ids())
    slept = []
    for n in field.alive_nodes():
        if n.id in dets:
            set_mode(n, NodeMode.MONITOR)
        elif n.id in keep_awake:
            was_asleep = n.mode is NodeMode.SLEEP
            set_mode(n, NodeMode.DETECT)
            if was_asleep and n.id in wake_targets:
                woken.add(n.id)
        else:
            if n.mode is not NodeMode.SLEEP:
                slept.append(n.id)
            set_mode(n, NodeMode.SLEEP)
    if slept:
        events.append(ProtocolEvent(EventKind.NODES_SLEPT, slot,
                                    tuple(sorted(slept))))

    new_tracker = TrackerState(episode=Episode.TRACKING,
                               detectors=frozenset(dets),
                               representative=rep, closest=pair,
                               predicted=region, est_pos=est,
                               est_speed=est_speed)
    return StepResult(new_tracker, events, transitions, slot_modes, outcomes,
                      woken, dets, wake_targets, frames_sent)
