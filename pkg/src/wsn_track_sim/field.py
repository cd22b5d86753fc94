"""Sensor field model: geometry, node state, random deployment, range queries.

Nodes are static once deployed; only the tracked target moves. All range
checks are boundary-inclusive (<=) so that brute-force oracles are exact.
With 250-ish nodes the linear scans below are plenty fast; a spatial index
would have to reproduce them bit for bit to be worth adding.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import ConfigError


@dataclass(frozen=True)
class Point:
    """A position in the plane, meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")


def distance(a: Point, b: Point) -> float:
    """Euclidean distance between two points, meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


class NodeMode(Enum):
    SLEEP = "sleep"      # no sensing; radio idle-listens for wake messages
    DETECT = "detect"    # actively sensing for the target
    MONITOR = "monitor"  # sensed the target, exchanging tracking messages


@dataclass
class SensorNode:
    """One sensor: fixed position, current mode, remaining battery."""

    id: int
    pos: Point
    mode: NodeMode = NodeMode.SLEEP
    remaining_energy: float = 0.0
    alive: bool = True


@dataclass(frozen=True)
class FieldConfig:
    """Deployment parameters. Defaults follow the standard evaluation setup."""

    area_width: float = 500.0
    area_height: float = 500.0
    n_nodes: int = 250
    r_s: float = 25.0   # sensing radius, meters
    r_c: float = 50.0   # communication radius, meters
    seed: int = 0

    def __post_init__(self) -> None:
        if self.area_width <= 0 or self.area_height <= 0:
            raise ConfigError("area dimensions must be positive")
        if self.n_nodes < 1:
            raise ConfigError("at least one node is required")
        if self.r_s <= 0:
            raise ConfigError("sensing radius must be positive")
        if self.r_c < 2 * self.r_s:
            raise ConfigError(
                f"communication radius {self.r_c} m violates r_c >= 2*r_s "
                f"(r_s = {self.r_s} m)"
            )


class NodeField:
    """A deployed field: ordered node list plus the config that produced it."""

    def __init__(self, nodes: Iterable[SensorNode], config: FieldConfig):
        self.nodes: list[SensorNode] = list(nodes)
        self.config = config
        self._by_id = {n.id: n for n in self.nodes}
        if len(self._by_id) != len(self.nodes):
            raise ConfigError("duplicate node ids in field")

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[SensorNode]:
        return iter(self.nodes)

    def node(self, node_id: int) -> SensorNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def alive_nodes(self) -> list[SensorNode]:
        return [n for n in self.nodes if n.alive]


def deploy(config: FieldConfig, initial_energy: float = 5.0) -> NodeField:
    """Place nodes uniformly at random inside the area.

    Ids are assigned 0..n-1 in draw order, everyone starts asleep with a full
    battery. Same config and seed reproduce the exact same field.
    """
    if initial_energy <= 0:
        raise ConfigError("initial energy must be positive")
    rng = random.Random(config.seed)
    nodes = []
    for i in range(config.n_nodes):
        pos = Point(rng.uniform(0.0, config.area_width),
                    rng.uniform(0.0, config.area_height))
        nodes.append(SensorNode(id=i, pos=pos, mode=NodeMode.SLEEP,
                                remaining_energy=initial_energy, alive=True))
    return NodeField(nodes, config)


def detectors_of(field: NodeField, target_pos: Point) -> set[int]:
    """Ids of alive nodes whose sensing disk contains the target (inclusive)."""
    r_s = field.config.r_s
    return {n.id for n in field.nodes
            if n.alive and distance(n.pos, target_pos) <= r_s}


def neighbors_of(field: NodeField, node_id: int) -> set[int]:
    """Ids of alive nodes within communication range of `node_id` (exclusive of itself)."""
    center = field.node(node_id).pos
    r_c = field.config.r_c
    return {n.id for n in field.nodes
            if n.alive and n.id != node_id and distance(n.pos, center) <= r_c}


def k_closest(field: NodeField, p: Point, k: int,
              candidates: Iterable[int]) -> list[int]:
    """The k candidate ids nearest to p, ascending by distance, ties by id.

    Fewer than k candidates returns all of them sorted; an empty candidate
    set returns an empty list (callers treat that as a lost target).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted((distance(field.node(i).pos, p), i) for i in set(candidates))
    return [i for _, i in ranked[:k]]
