"""Relative-offset mesh routing between cores.

Packets carry a signed ``(dx, dy)`` offset (east and north positive) and are
routed X first, then Y. Hops add no latency; the packet's own delay field is
the only timing.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .errors import AxonOutOfRange

MAX_CORES = 4096


class Edge(str, enum.Enum):
    EAST = "east"
    WEST = "west"
    NORTH = "north"
    SOUTH = "south"


@dataclass(frozen=True)
class GridTopology:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1 (got {self.width}x{self.height})")
        if self.width * self.height > MAX_CORES:
            raise ValueError(f"{self.width}x{self.height} grid exceeds {MAX_CORES} cores")

    def __contains__(self, xy) -> bool:
        x, y = xy
        return 0 <= x < self.width and 0 <= y < self.height

    def __len__(self) -> int:
        return self.width * self.height

    def index(self, x: int, y: int) -> int:
        """Canonical core index, row-major by ``y`` then ``x``."""
        return y * self.width + x

    def coords(self, index: int) -> Tuple[int, int]:
        return index % self.width, index // self.width


@dataclass(frozen=True)
class SpikePacket:
    dx: int
    dy: int
    axon: int
    delay: int
    emit_tick: int = 0
    source: Optional[tuple] = None  # (core_x, core_y, neuron)


@dataclass(frozen=True)
class Delivered:
    core: Tuple[int, int]


@dataclass(frozen=True)
class Exited:
    edge: Edge
    residual_dx: int
    residual_dy: int


def route(grid: GridTopology, origin, dx: int, dy: int) -> Union[Delivered, Exited]:
    """Resolve where an offset from ``origin`` lands.

    Residual offsets count the hops still outstanding after crossing the
    boundary.
    """
    x, y = origin
    tx = x + dx
    if tx >= grid.width:
        return Exited(Edge.EAST, tx - grid.width, dy)
    if tx < 0:
        return Exited(Edge.WEST, tx + 1, dy)
    ty = y + dy
    if ty >= grid.height:
        return Exited(Edge.NORTH, 0, ty - grid.height)
    if ty < 0:
        return Exited(Edge.SOUTH, 0, ty + 1)
    return Delivered((tx, ty))


def route_and_deliver(grid: GridTopology, origin, pkt: SpikePacket, schedulers):
    """Route ``pkt`` and enqueue it at its destination core if it stays on-grid.

    ``schedulers`` maps ``(x, y)`` to a :class:`~tnemu.core.SchedulerBuffer`.
    """
    outcome = route(grid, origin, pkt.dx, pkt.dy)
    if isinstance(outcome, Delivered):
        schedulers[outcome.core].enqueue(pkt.axon, pkt.emit_tick, pkt.delay)
    return outcome


def inject_external(schedulers, core, axon: int, at_tick: int, next_tick: int):
    """Place an external spike on ``axon`` of ``core`` for tick ``at_tick``."""
    try:
        buf = schedulers[tuple(core)]
    except KeyError:
        raise AxonOutOfRange(f"no core at {tuple(core)}") from None
    buf.inject(axon, at_tick, next_tick)
