"""Scenario assembly: defaults, flat config files, seed substreams, digests.

Config files are flat UTF-8 ``key = value`` text with dotted keys; CLI flags
override file values. Every run embeds a short digest of the fully resolved
configuration (including the PRNG identity) so a report row can be traced
back to the exact inputs that produced it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .energy import ModeCosts, RadioModel
from .errors import ConfigError
from .field import FieldConfig, Point
from .mac import SlotConfig
from .mobility import MobilityConfig, validate_mobility

PRNG_NAME = "mt19937"  # python random.Random; substream seeds derived via sha256

METHODS = ("proposed", "baseline")


def derive_seed(master: int, label: str) -> int:
    """Stable 64-bit substream seed for (master seed, purpose label)."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ScenarioConfig:
    field: FieldConfig
    mobility: MobilityConfig
    slots: SlotConfig
    radio: RadioModel
    mode_costs: ModeCosts
    method: str = "proposed"
    max_slots: int = 500
    alpha: float = 1.5             # prediction radius multiplier
    radius_floor_frac: float = 0.1
    seed: int = 0
    bench_packets: int = 3000
    bench_background_senders: int = 3

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.max_slots < 1:
            raise ConfigError("max_slots must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not (0 < self.radius_floor_frac <= 1):
            raise ConfigError("radius floor fraction must lie in (0, 1]")
        if self.bench_packets < 1 or self.bench_background_senders < 0:
            raise ConfigError("bench parameters out of range")
        if self.mobility.slot_duration != self.slots.slot_duration:
            raise ConfigError("mobility and MAC slot durations must agree")
        validate_mobility(self.mobility, self.field)


def default_scenario(seed: int = 0, method: str = "proposed",
                     max_slots: int = 500) -> ScenarioConfig:
    cfg = ScenarioConfig(field=FieldConfig(), mobility=MobilityConfig(),
                         slots=SlotConfig(), radio=RadioModel(),
                         mode_costs=ModeCosts(), method=method,
                         max_slots=max_slots, seed=seed)
    return with_seed(cfg, seed)


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Re-key every random substream of a scenario from one master seed."""
    return replace(cfg,
                   seed=seed,
                   field=replace(cfg.field, seed=derive_seed(seed, "field")),
                   mobility=replace(cfg.mobility, seed=derive_seed(seed, "mobility")))


def mac_seed(cfg: ScenarioConfig) -> int:
    return derive_seed(cfg.seed, f"mac:{cfg.method}")


# -- flat key = value files --------------------------------------------------

def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_entry(raw: str):
    if raw.strip().lower() in ("random-edge", "random_edge"):
        return None
    parts = raw.split(",")
    if len(parts) != 2:
        raise ConfigError(f"entry point must be 'random-edge' or 'x,y', got {raw!r}")
    return Point(float(parts[0]), float(parts[1]))


# key -> (section, field name, parser)
_KEY_TABLE = {
    "field.area_width": ("field", "area_width", float),
    "field.area_height": ("field", "area_height", float),
    "field.n_nodes": ("field", "n_nodes", int),
    "field.r_s": ("field", "r_s", float),
    "field.r_c": ("field", "r_c", float),
    "mobility.v_min": ("mobility", "v_min", float),
    "mobility.v_max": ("mobility", "v_max", float),
    "mobility.entry": ("mobility", "entry_point", _parse_entry),
    "slot.duration": ("slot", "slot_duration", float),
    "slot.data_packet_bits": ("slot", "data_packet_bits", int),
    "slot.control_packet_bits": ("slot", "control_packet_bits", int),
    "slot.data_rate": ("slot", "data_rate", float),
    "slot.p_persist": ("slot", "p_persist", float),
    "slot.max_retries": ("slot", "max_retries", int),
    "slot.ack_enabled": ("slot", "ack_enabled", _parse_bool),
    "slot.crc_enabled": ("slot", "crc_enabled", _parse_bool),
    "slot.crc_bits": ("slot", "crc_bits", int),
    "slot.sense_fraction": ("slot", "sense_fraction", float),
    "radio.e_elect": ("radio", "e_elect", float),
    "radio.e_amp": ("radio", "e_amp", float),
    "radio.e_tx_fixed": ("radio", "e_tx_fixed", float),
    "radio.e_rx_fixed": ("radio", "e_rx_fixed", float),
    "energy.sleep_per_slot": ("energy", "sleep_per_slot", float),
    "energy.sense_per_slot": ("energy", "sense_per_slot", float),
    "energy.comm_per_slot": ("energy", "comm_per_slot", float),
    "energy.initial": ("energy", "initial_energy", float),
    "energy.wake_cost": ("energy", "wake_cost", float),
    "protocol.alpha": ("scenario", "alpha", float),
    "protocol.radius_floor_frac": ("scenario", "radius_floor_frac", float),
    "bench.packets": ("scenario", "bench_packets", int),
    "bench.background_senders": ("scenario", "bench_background_senders", int),
    "run.method": ("scenario", "method", str),
    "run.max_slots": ("scenario", "max_slots", int),
    "run.seed": ("scenario", "seed", int),
}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def load_config_file(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def build_scenario(values: dict[str, str] | None = None, *,
                   method: str | None = None, seed: int | None = None,
                   max_slots: int | None = None) -> ScenarioConfig:
    """Assemble a ScenarioConfig from file values plus explicit overrides."""
    sections: dict[str, dict] = {"field": {}, "mobility": {}, "slot": {},
                                 "radio": {}, "energy": {}, "scenario": {}}
    for key, raw in (values or {}).items():
        section, name, parse = _KEY_TABLE[key]
        try:
            sections[section][name] = parse(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None

    scen = sections["scenario"]
    if method is not None:
        scen["method"] = method
    if seed is not None:
        scen["seed"] = seed
    if max_slots is not None:
        scen["max_slots"] = max_slots

    duration = sections["slot"].get("slot_duration", 1.0)
    cfg = ScenarioConfig(
        field=FieldConfig(**sections["field"]),
        mobility=MobilityConfig(slot_duration=duration, **sections["mobility"]),
        slots=SlotConfig(**sections["slot"]),
        radio=RadioModel(**sections["radio"]),
        mode_costs=ModeCosts(**sections["energy"]),
        **scen,
    )
    return with_seed(cfg, cfg.seed)


def resolved_items(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    """Canonical (key, value) lines for the fully resolved configuration."""
    entry = cfg.mobility.entry_point
    mapping = {
        "field.area_width": cfg.field.area_width,
        "field.area_height": cfg.field.area_height,
        "field.n_nodes": cfg.field.n_nodes,
        "field.r_s": cfg.field.r_s,
        "field.r_c": cfg.field.r_c,
        "mobility.v_min": cfg.mobility.v_min,
        "mobility.v_max": cfg.mobility.v_max,
        "mobility.entry": "random-edge" if entry is None else f"{entry.x},{entry.y}",
        "slot.duration": cfg.slots.slot_duration,
        "slot.data_packet_bits": cfg.slots.data_packet_bits,
        "slot.control_packet_bits": cfg.slots.control_packet_bits,
        "slot.data_rate": cfg.slots.data_rate,
        "slot.p_persist": cfg.slots.p_persist,
        "slot.max_retries": cfg.slots.max_retries,
        "slot.ack_enabled": cfg.slots.ack_enabled,
        "slot.crc_enabled": cfg.slots.crc_enabled,
        "slot.crc_bits": cfg.slots.crc_bits,
        "slot.sense_fraction": cfg.slots.sense_fraction,
        "radio.e_elect": cfg.radio.e_elect,
        "radio.e_amp": cfg.radio.e_amp,
        "radio.e_tx_fixed": cfg.radio.e_tx_fixed,
        "radio.e_rx_fixed": cfg.radio.e_rx_fixed,
        "energy.sleep_per_slot": cfg.mode_costs.sleep_per_slot,
        "energy.sense_per_slot": cfg.mode_costs.sense_per_slot,
        "energy.comm_per_slot": cfg.mode_costs.comm_per_slot,
        "energy.initial": cfg.mode_costs.initial_energy,
        "energy.wake_cost": cfg.mode_costs.wake_cost,
        "protocol.alpha": cfg.alpha,
        "protocol.radius_floor_frac": cfg.radius_floor_frac,
        "bench.packets": cfg.bench_packets,
        "bench.background_senders": cfg.bench_background_senders,
        "run.method": cfg.method,
        "run.max_slots": cfg.max_slots,
        "run.seed": cfg.seed,
        "prng": PRNG_NAME,
    }
    return [(k, str(v)) for k, v in sorted(mapping.items())]


def config_digest(cfg: ScenarioConfig) -> str:
    text = "\n".join(f"{k} = {v}" for k, v in resolved_items(cfg))
    return hashlib.sha256(text.encode()).hexdigest()[:12]
