"""Slotted medium access: p-persistent contention, transmission, ACK accounting.

Each slot opens with channel sensing, carries at most one data transmission
per contention round, and closes with an ACK window when ACKs are enabled.
Collisions are detected through the missing ACK; collided frames burn their
transmit energy and retry. All senders that share a slot are treated as one
contention domain: in this protocol every concurrent sender sits within
communication range of the same receiver neighborhood (r_c >= 2*r_s keeps
co-detectors mutually in range), so spatial reuse never arises.
"""

from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Iterable, NamedTuple

from .errors import ConfigError, MacError


class FrameKind(Enum):
    OBSERVATION_NOTICE = "notice"
    WAKE_MESSAGE = "wake"
    DATA_PAYLOAD = "data"


# frames that ride the data window and carry a CRC when enabled
_DATA_KINDS = (FrameKind.OBSERVATION_NOTICE, FrameKind.DATA_PAYLOAD)


@dataclass(frozen=True)
class SlotConfig:
    slot_duration: float = 1.0
    data_packet_bits: int = 512
    control_packet_bits: int = 32
    data_rate: float = 8_000_000.0  # bits/second (1 MB/s)
    p_persist: float = 0.5
    max_retries: int = 5
    ack_enabled: bool = True
    crc_enabled: bool = True
    crc_bits: int = 32
    sense_fraction: float = 0.05  # share of the slot spent sensing the channel

    def __post_init__(self) -> None:
        if self.slot_duration <= 0 or self.data_rate <= 0:
            raise ConfigError("slot duration and data rate must be positive")
        if self.data_packet_bits <= 0 or self.control_packet_bits <= 0:
            raise ConfigError("packet sizes must be positive")
        if not (0 < self.p_persist <= 1):
            raise ConfigError("p_persist must lie in (0, 1]")
        if self.max_retries < 0 or self.crc_bits < 0:
            raise ConfigError("max_retries and crc_bits must be non-negative")
        if not (0 <= self.sense_fraction < 1):
            raise ConfigError("sense fraction must lie in [0, 1)")
        air = self.data_packet_bits + (self.crc_bits if self.crc_enabled else 0)
        busy = (self.sense_fraction * self.slot_duration
                + air / self.data_rate
                + (self.control_packet_bits / self.data_rate if self.ack_enabled else 0))
        if busy > self.slot_duration:
            raise ConfigError(
                f"slot budget exceeded: sensing + data + ACK need {busy:.6f} s "
                f"but the slot lasts {self.slot_duration} s"
            )

    def data_window_seconds(self) -> float:
        ack = self.control_packet_bits / self.data_rate if self.ack_enabled else 0.0
        return self.slot_duration * (1 - self.sense_fraction) - ack


@dataclass
class Frame:
    src: int
    dst: int
    kind: FrameKind
    bits: int
    enqueued_slot: int
    retries: int = 0
    ts_slot: int | None = None  # slot of the first send attempt (T_s basis)

    def __post_init__(self) -> None:
        if self.bits <= 0:
            raise ConfigError("frame must carry at least one bit")
        if self.src == self.dst:
            raise ConfigError("frame source and destination must differ")


def on_air_bits(frame: Frame, cfg: SlotConfig) -> int:
    """Bits actually radiated: payload plus CRC for data-window frames."""
    if cfg.crc_enabled and frame.kind in _DATA_KINDS:
        return frame.bits + cfg.crc_bits
    return frame.bits


class RadioOp(NamedTuple):
    """One radio action: `node` transmits to / receives from `peer`."""

    op: str  # "tx" or "rx"
    node: int
    peer: int
    bits: int


@dataclass
class SlotOutcome:
    """What happened on the channel during one contention round."""

    slot: int
    winner: int | None = None
    collided: set[int] = dc_field(default_factory=set)
    delivered: list[tuple[Frame, int]] = dc_field(default_factory=list)
    acked: bool = False
    records: list[RadioOp] = dc_field(default_factory=list)

    def add_tx(self, node: int, peer: int, bits: int) -> None:
        self.records.append(RadioOp("tx", node, peer, bits))

    def add_rx(self, node: int, peer: int, bits: int) -> None:
        self.records.append(RadioOp("rx", node, peer, bits))

    @property
    def tx_counts(self) -> Counter:
        return Counter(r.node for r in self.records if r.op == "tx")

    @property
    def rx_counts(self) -> Counter:
        return Counter(r.node for r in self.records if r.op == "rx")

    def airtime_bits(self) -> int:
        return sum(r.bits for r in self.records if r.op == "tx")


def contend(contenders: Iterable[int], slot: int, cfg: SlotConfig,
            rng: random.Random) -> SlotOutcome:
    """One p-persistent round: every contender transmits with probability p.

    Draws happen in ascending id order so the outcome is reproducible.
    Exactly one transmitter wins the round; two or more collide; zero leaves
    the round idle.
    """
    out = SlotOutcome(slot=slot)
    transmitters = [nid for nid in sorted(set(contenders))
                    if rng.random() < cfg.p_persist]
    if len(transmitters) == 1:
        out.winner = transmitters[0]
    elif len(transmitters) > 1:
        out.collided = set(transmitters)
    return out


def transmit(frame: Frame, outcome: SlotOutcome, cfg: SlotConfig,
             slot: int) -> SlotOutcome:
    """Send the winner's frame and, when enabled, its end-of-slot ACK.

    The frame is in the receiver's hands at the slot boundary, so the recorded
    delivery slot is `slot + 1` (a frame that collides in its enqueue slot and
    wins the next one is delivered at enqueued_slot + 2).
    """
    if outcome.winner != frame.src:
        raise MacError(f"node {frame.src} transmitted without winning slot {slot}")
    air = on_air_bits(frame, cfg)
    if air / cfg.data_rate > cfg.data_window_seconds():
        raise ConfigError(
            f"{air}-bit frame does not fit the {cfg.data_window_seconds():.6f} s data window"
        )
    outcome.add_tx(frame.src, frame.dst, air)
    outcome.add_rx(frame.dst, frame.src, air)
    outcome.delivered.append((frame, slot + 1))
    if cfg.ack_enabled:
        outcome.add_tx(frame.dst, frame.src, cfg.control_packet_bits)
        outcome.add_rx(frame.src, frame.dst, cfg.control_packet_bits)
        outcome.acked = True
    return outcome


Queues = dict[int, deque]


def _round(queues: Queues, slot: int, cfg: SlotConfig, rng: random.Random,
           dropped: list[Frame]) -> SlotOutcome:
    """One contention round over the heads of all non-empty queues."""
    ready = [nid for nid, q in queues.items() if q]
    for nid in ready:
        head = queues[nid][0]
        if head.ts_slot is None:
            head.ts_slot = slot  # the frame reaches the air interface here
    out = contend(ready, slot, cfg, rng)
    for nid in sorted(out.collided):
        frame = queues[nid][0]
        out.add_tx(nid, frame.dst, on_air_bits(frame, cfg))  # collided energy is spent
        frame.retries += 1
        if frame.retries > cfg.max_retries:
            queues[nid].popleft()
            dropped.append(frame)
    if out.winner is not None:
        frame = queues[out.winner].popleft()
        transmit(frame, out, cfg, slot)
    return out


def drain_queue(queues: Queues, budget: int, cfg: SlotConfig,
                rng: random.Random, start_slot: int = 0) -> list[SlotOutcome]:
    """Run slots until all queues empty or the budget runs out.

    Collided frames retry in later slots up to max_retries, then drop.
    Delivered + dropped + still queued always equals enqueued.
    """
    outcomes: list[SlotOutcome] = []
    dropped: list[Frame] = []
    slot = start_slot
    while budget > 0 and any(queues.values()):
        outcomes.append(_round(queues, slot, cfg, rng, dropped))
        slot += 1
        budget -= 1
    return outcomes


def data_window(queues: Queues, slot: int, cfg: SlotConfig,
                rng: random.Random) -> tuple[list[SlotOutcome], list[Frame]]:
    """One slot's data window: bounded re-sensing rounds, leftovers drop.

    The window re-runs contention up to max_retries + 1 times within the same
    slot; frames still queued when it closes are stale and dropped (they count
    as sent but not received).
    """
    outcomes: list[SlotOutcome] = []
    dropped: list[Frame] = []
    for _ in range(cfg.max_retries + 1):
        if not any(queues.values()):
            break
        outcomes.append(_round(queues, slot, cfg, rng, dropped))
    for q in queues.values():
        while q:
            dropped.append(q.popleft())
    return outcomes, dropped


class MacService:
    """Per-run MAC state: the slot configuration plus its contention RNG."""

    def __init__(self, cfg: SlotConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng

    def data_window(self, queues: Queues, slot: int):
        return data_window(queues, slot, self.cfg, self.rng)


def write_outcomes_csv(outcomes: list[SlotOutcome], path: str) -> int:
    """Debug dump of slot outcomes as `slot,winner,collided,delivered,acked`."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "winner", "collided", "delivered", "acked"])
        for out in outcomes:
            writer.writerow([
                out.slot,
                "" if out.winner is None else out.winner,
                ";".join(str(i) for i in sorted(out.collided)),
                ";".join(f"{f.src}->{f.dst}@{s}" for f, s in out.delivered),
                out.acked,
            ])
    return len(outcomes) + 1
