"""Common agent contract shared by the proactive and reactive protocols.

A proactive agent keeps its table current with periodic traffic and only
buffers while the table has no valid entry. A reactive agent buffers and
starts a discovery when a packet arrives for an unknown destination.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from ..metrics import MetricsAccumulator
from ..radio import CONTROL, DATA, Frame, Radio
from ..sim_core import Simulator

log = logging.getLogger(__name__)

DEFAULT_TTL = 32
DEFAULT_BUFFER = 64
DATA_HEADER = 0  # the configured packet size already includes network headers


@dataclass
class PacketEnvelope:
    packet_id: int
    src: int
    dst: int
    size: int
    created_at: int
    ttl: int = DEFAULT_TTL
    hops_visited: list = field(default_factory=list)
    delivered_at: Optional[int] = None
    source_route: Optional[tuple] = None
    salvaged: int = 0

    def __post_init__(self):
        if not self.hops_visited:
            self.hops_visited = [self.src]

    def copy(self) -> "PacketEnvelope":
        return replace(self, hops_visited=list(self.hops_visited))


@dataclass
class BufferedPacket:
    pkt: PacketEnvelope
    queued_at: int
    timer: object = None


class SendBuffer:
    """FIFO of packets awaiting a route; full buffer evicts the oldest."""

    def __init__(self, capacity: int = DEFAULT_BUFFER):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        self.capacity = capacity
        self._q: deque[BufferedPacket] = deque()

    def __len__(self) -> int:
        return len(self._q)

    def __iter__(self):
        return iter(self._q)

    def push(self, item: BufferedPacket) -> Optional[BufferedPacket]:
        evicted = self._q.popleft() if len(self._q) >= self.capacity else None
        self._q.append(item)
        return evicted

    def take(self, predicate) -> list[BufferedPacket]:
        keep, out = deque(), []
        for item in self._q:
            (out if predicate(item) else keep).append(item)
        self._q = keep
        return out

    def remove(self, item: BufferedPacket) -> bool:
        try:
            self._q.remove(item)
        except ValueError:
            return False
        return True


class RoutingAgent:
    """Per-node protocol instance driven by the event loop.

    Subclasses implement ``lookup``, ``send_data`` (first hop or forward),
    ``on_no_route`` and ``handle_control``. Every control transmission goes
    through :meth:`send_control` so it is counted exactly once.
    """

    kind = "base"
    reactive = True

    def __init__(self, node: int, sim: Simulator, radio: Radio, metrics: MetricsAccumulator,
                 rng, *, buffer_size: int = DEFAULT_BUFFER, **options):
        self.node = node
        self.sim = sim
        self.radio = radio
        self.metrics = metrics
        self.rng = rng
        self.buffer = SendBuffer(buffer_size)
        self.delivered_log: Optional[list] = None
        self.loop_events = 0
        if options:
            raise TypeError(f"unknown {self.kind} options: {sorted(options)}")
        radio.attach(node, self)

    def start(self) -> None:
        """Arm periodic timers; called once before the run."""

    # -- radio helpers --------------------------------------------------------
    def send_control(self, payload, size: int, dst: Optional[int] = None, overhearers=()):
        self.metrics.on_control(size)
        frame = Frame(self.node, CONTROL, size, payload)
        if dst is None:
            return self.radio.broadcast(frame)
        return self.radio.unicast(frame, dst, overhearers=overhearers)

    def transmit_data(self, pkt: PacketEnvelope, next_hop: int, size: int, overhearers=()):
        return self.radio.unicast(Frame(self.node, DATA, size, pkt.copy()), next_hop,
                                  overhearers=overhearers)

    def data_frame_size(self, pkt: PacketEnvelope) -> int:
        return pkt.size + DATA_HEADER

    # -- data path --------------------------------------------------------------
    def on_data_to_send(self, pkt: PacketEnvelope) -> None:
        self.metrics.on_sent(pkt)
        self.enqueue_or_send(pkt)

    def enqueue_or_send(self, pkt: PacketEnvelope) -> str:
        if pkt.dst == self.node:
            self.deliver(pkt)
            return "delivered"
        if self.lookup(pkt.dst) is not None:
            self.send_data(pkt)
            return "sent"
        self.buffer_packet(pkt)
        self.on_no_route(pkt.dst)
        return "buffered"

    def buffer_packet(self, pkt: PacketEnvelope) -> BufferedPacket:
        item = BufferedPacket(pkt, self.sim.now)
        evicted = self.buffer.push(item)
        if evicted is not None:
            Simulator.cancel(evicted.timer)
            self.drop(evicted.pkt, "no-route")
        return item

    def flush_buffer(self, dst: Optional[int] = None) -> int:
        """Send buffered packets (FIFO) whose destination now has a route."""
        ready = self.buffer.take(lambda it: (dst is None or it.pkt.dst == dst)
                                 and self.lookup(it.pkt.dst) is not None)
        for item in ready:
            Simulator.cancel(item.timer)
            self.send_data(item.pkt)
        return len(ready)

    def drop_buffered(self, dst: int, reason: str) -> int:
        gone = self.buffer.take(lambda it: it.pkt.dst == dst)
        for item in gone:
            Simulator.cancel(item.timer)
            self.drop(item.pkt, reason)
        return len(gone)

    def deliver(self, pkt: PacketEnvelope) -> bool:
        pkt.delivered_at = self.sim.now
        fresh = self.metrics.on_deliver(pkt, self.sim.now)
        if fresh and self.delivered_log is not None:
            self.delivered_log.append(pkt)
        return fresh

    def drop(self, pkt: PacketEnvelope, reason: str) -> None:
        log.debug("node %s drops packet %s (%s)", self.node, pkt.packet_id, reason)
        self.metrics.on_drop(pkt, reason)

    def accept_data(self, frame: Frame) -> Optional[PacketEnvelope]:
        """Common receive path for a data frame; returns the packet if it needs forwarding."""
        pkt: PacketEnvelope = frame.payload
        if pkt.hops_visited[-1] != self.node:
            if self.node in pkt.hops_visited:
                self.loop_events += 1
                log.debug("packet %s revisits node %s", pkt.packet_id, self.node)
            pkt.hops_visited.append(self.node)
        if pkt.dst == self.node:
            self.deliver(pkt)
            return None
        if len(pkt.hops_visited) - 1 >= pkt.ttl:
            self.drop(pkt, "ttl")
            return None
        return pkt

    def on_frame_received(self, frame: Frame) -> None:
        if frame.kind == DATA:
            self.handle_data(frame)
        else:
            self.handle_control(frame.payload, frame.sender)

    def on_overhear(self, frame: Frame) -> None:
        pass

    def held_packet_ids(self) -> set:
        return {item.pkt.packet_id for item in self.buffer}

    # -- protocol hooks ---------------------------------------------------------
    def lookup(self, dst: int):
        raise NotImplementedError

    def send_data(self, pkt: PacketEnvelope) -> None:
        raise NotImplementedError

    def on_no_route(self, dst: int) -> None:
        raise NotImplementedError

    def handle_data(self, frame: Frame) -> None:
        raise NotImplementedError

    def handle_control(self, msg, sender: int) -> None:
        raise NotImplementedError
