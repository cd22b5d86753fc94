"""Energy accounting and run metrics.

Radio costs use the first-order model (electronics + d^2 amplifier term);
platform costs are flat per-slot amounts per mode. Every joule leaves a node
through the ledger's debit(), which clamps at zero and kills the node, so
conservation checks can replay the append-only debit log.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from statistics import fmean

from .errors import ConfigError
from .field import NodeField, NodeMode, distance


@dataclass(frozen=True)
class RadioModel:
    """First-order radio constants (joules)."""

    e_elect: float = 50e-9       # J/bit, electronics
    e_amp: float = 0.0013e-12    # J/bit/m^2, amplifier
    e_tx_fixed: float = 0.0      # optional per-packet overhead, transmit side
    e_rx_fixed: float = 0.0      # optional per-packet overhead, receive side

    def __post_init__(self) -> None:
        if min(self.e_elect, self.e_amp, self.e_tx_fixed, self.e_rx_fixed) < 0:
            raise ConfigError("radio energy constants must be non-negative")


@dataclass(frozen=True)
class ModeCosts:
    """Flat per-slot platform costs per mode, plus battery parameters."""

    sleep_per_slot: float = 0.00027
    sense_per_slot: float = 0.012
    comm_per_slot: float = 0.0378
    initial_energy: float = 5.0
    wake_cost: float = 0.001  # one-shot cost when a wake message pulls a node out of sleep

    def __post_init__(self) -> None:
        if not (0 <= self.sleep_per_slot <= self.sense_per_slot <= self.comm_per_slot):
            raise ConfigError("mode costs must satisfy sleep <= sense <= comm")
        if self.initial_energy <= 0:
            raise ConfigError("initial energy must be positive")
        if self.wake_cost < 0:
            raise ConfigError("wake cost must be non-negative")


def tx_energy(bits: int, dist: float, rm: RadioModel) -> float:
    """Energy to transmit `bits` over `dist` meters."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    if dist < 0:
        raise ValueError("distance must be non-negative")
    return rm.e_elect * bits + rm.e_amp * bits * dist * dist + rm.e_tx_fixed


def rx_energy(bits: int, rm: RadioModel) -> float:
    """Energy to receive `bits` (distance-independent)."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    return rm.e_elect * bits + rm.e_rx_fixed


class EnergyLedger:
    """Per-node battery bookkeeping with an append-only debit log.

    The ledger owns the remaining-energy truth and mirrors it onto the
    SensorNode objects so that alive/mode state stays consistent: a node whose
    battery clamps to zero is marked dead and dropped to sleep.
    """

    def __init__(self, field: NodeField, wake_cost: float = 0.001):
        self.field = field
        self.per_node: dict[int, float] = {n.id: n.remaining_energy for n in field.nodes}
        self.initial_levels: dict[int, float] = dict(self.per_node)
        self.debits: list[tuple[int, int, str, float]] = []  # (slot, node, reason, applied J)
        self.e_ix = wake_cost
        self.e_sx_total = 0.0  # running network total; == sum of applied debits

    def remaining(self, node_id: int) -> float:
        return self.per_node[node_id]

    def total_remaining(self) -> float:
        return math.fsum(self.per_node.values())

    def debit(self, node_id: int, amount: float, reason: str, slot: int) -> float:
        """Draw `amount` joules from a node, clamped at zero. Returns the applied amount."""
        if amount < 0:
            raise ValueError("debit amount must be non-negative")
        node = self.field.node(node_id)
        current = self.per_node[node_id]
        applied = amount if amount <= current else current
        new_level = current - applied
        if new_level <= 0:
            new_level = 0.0
            node.alive = False
            node.mode = NodeMode.SLEEP
        self.per_node[node_id] = new_level
        node.remaining_energy = new_level
        self.debits.append((slot, node_id, reason, applied))
        self.e_sx_total += applied
        return applied

    def write_csv(self, path: str) -> int:
        """Debug dump of every debit as `slot,node,mode,debit_j,remaining_j`.

        Remaining levels are replayed from the initial charge with the same
        arithmetic the ledger used, so the final row per node matches the
        live ledger bit for bit.
        """
        import csv

        levels = dict(self.initial_levels)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["slot", "node", "mode", "debit_j", "remaining_j"])
            for slot, node_id, reason, applied in self.debits:
                levels[node_id] = levels[node_id] - applied
                writer.writerow([slot, node_id, reason,
                                 format(applied, ".9g"),
                                 format(levels[node_id], ".9g")])
        return len(self.debits) + 1


_MODE_REASON = {
    NodeMode.SLEEP: "sleep",
    NodeMode.DETECT: "sense",
    NodeMode.MONITOR: "comm",
}


def mode_cost(mode: NodeMode, costs: ModeCosts) -> float:
    if mode is NodeMode.SLEEP:
        return costs.sleep_per_slot
    if mode is NodeMode.DETECT:
        return costs.sense_per_slot
    return costs.comm_per_slot


def settle_slot(ledger: EnergyLedger, field: NodeField, outcomes,
                rm: RadioModel, costs: ModeCosts,
                slot_modes: dict[int, NodeMode], woken=(), slot: int = 0) -> None:
    """Charge one slot: platform cost per mode, radio cost per frame, wake-up costs.

    `slot_modes` holds the mode each node occupied during the slot body;
    `woken` lists nodes pulled out of sleep by a wake message this slot.
    Radio charges follow the MAC outcome records, so the ledger's tx/rx debit
    counts reconcile exactly with the MAC's own counters.
    """
    for node in field.nodes:
        mode = slot_modes.get(node.id)
        if mode is None or not node.alive:
            continue
        ledger.debit(node.id, mode_cost(mode, costs), _MODE_REASON[mode], slot)
    for out in outcomes:
        for rec in out.records:
            if rec.op == "tx":
                d = distance(field.node(rec.node).pos, field.node(rec.peer).pos)
                ledger.debit(rec.node, tx_energy(rec.bits, d, rm), "tx", slot)
            else:
                ledger.debit(rec.node, rx_energy(rec.bits, rm), "rx", slot)
    for node_id in sorted(woken):
        ledger.debit(node_id, ledger.e_ix, "wake", slot)


def settle_radio(ledger: EnergyLedger, field: NodeField, outcomes,
                 rm: RadioModel) -> list[float]:
    """Charge only the radio records of each outcome; returns per-outcome joules.

    Used by the throughput bench, which measures the MAC in isolation and does
    not advance the platform's per-slot mode costs.
    """
    per_outcome = []
    for out in outcomes:
        before = ledger.e_sx_total
        for rec in out.records:
            if rec.op == "tx":
                d = distance(field.node(rec.node).pos, field.node(rec.peer).pos)
                ledger.debit(rec.node, tx_energy(rec.bits, d, rm), "tx", out.slot)
            else:
                ledger.debit(rec.node, rx_energy(rec.bits, rm), "rx", out.slot)
        per_outcome.append(ledger.e_sx_total - before)
    return per_outcome


def debit_counts_by_reason(ledger: EnergyLedger, reason: str) -> Counter:
    """How many debits of a given reason each node accrued (for reconciliation)."""
    counts: Counter = Counter()
    for _, node_id, why, _ in ledger.debits:
        if why == reason:
            counts[node_id] += 1
    return counts


@dataclass
class MetricCounters:
    """Raw material for the three run metrics."""

    bits_received: int = 0
    elapsed: float = 0.0          # seconds; wall time for runs, airtime for the bench
    sent_pckt: int = 0
    recv_pckt: int = 0
    delays: list[float] = dc_field(default_factory=list)


def throughput(mc: MetricCounters) -> float:
    """Received bits per second over the elapsed time."""
    if mc.elapsed <= 0:
        raise ValueError("elapsed time must be positive")
    return mc.bits_received / mc.elapsed


def delay(t_s: float, t_d: float) -> float:
    """End-to-end delay of one packet: receive time minus send time."""
    if t_d < t_s:
        raise ValueError(f"delivery at {t_d} precedes send at {t_s}")
    return t_d - t_s


def pdr(mc: MetricCounters):
    """Packet delivery ratio, or None when nothing was sent."""
    if mc.sent_pckt == 0:
        return None
    return mc.recv_pckt / mc.sent_pckt


def mean_delay(mc: MetricCounters) -> float:
    return fmean(mc.delays) if mc.delays else 0.0
