"""DSR: source routing with flooded discovery, per-hop acknowledgement and route caching."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from ..sim_core import Simulator, to_us
from .base import PacketEnvelope, RoutingAgent

log = logging.getLogger(__name__)

ACK_SIZE = 8


def data_size(payload: int, route_len: int) -> int:
    return payload + 8 + 4 * route_len


def rreq_size(record_len: int) -> int:
    return 16 + 4 * record_len


def rrep_size(route_len: int) -> int:
    return 16 + 4 * route_len


def rerr_size(path_len: int) -> int:
    return 12 + 4 * path_len


def is_simple(route) -> bool:
    return len(set(route)) == len(route)


class RouteCache:
    """Source routes from ``owner`` keyed by destination; the shortest few are kept."""

    def __init__(self, owner: int, capacity: int = 4, ttl_us: int = 30_000_000):
        self.owner = owner
        self.capacity = capacity
        self.ttl_us = ttl_us
        self._routes: dict[int, list[tuple[tuple, int]]] = {}

    def add(self, route, now: int) -> bool:
        route = tuple(route)
        if len(route) < 2 or route[0] != self.owner or not is_simple(route):
            return False
        dst = route[-1]
        bucket = self._routes.setdefault(dst, [])
        if any(r == route for r, _ in bucket):
            return False
        bucket.append((route, now))
        bucket.sort(key=lambda item: len(item[0]))  # stable: older first among equals
        if len(bucket) > self.capacity:
            dropped = bucket.pop()
            return dropped[0] != route
        return True

    def lookup(self, dst: int, now: int) -> Optional[tuple]:
        bucket = self._routes.get(dst)
        if not bucket:
            return None
        live = [(r, t) for r, t in bucket if now - t < self.ttl_us]
        if len(live) != len(bucket):
            self._routes[dst] = live
        return live[0][0] if live else None

    def remove_link(self, a: int, b: int) -> int:
        removed = 0
        for dst in list(self._routes):
            keep = [(r, t) for r, t in self._routes[dst] if not _uses_link(r, a, b)]
            removed += len(self._routes[dst]) - len(keep)
            self._routes[dst] = keep
        return removed

    def routes(self, now: Optional[int] = None) -> list[tuple]:
        return [r for bucket in self._routes.values() for r, t in bucket
                if now is None or now - t < self.ttl_us]

    def __contains__(self, route) -> bool:
        route = tuple(route)
        return any(r == route for r, _ in self._routes.get(route[-1], ()))


def _uses_link(route, a, b) -> bool:
    return any((x, y) in ((a, b), (b, a)) for x, y in zip(route, route[1:]))


@dataclass(frozen=True)
class DsrRreq:
    request_id: tuple
    target: int
    route_record: tuple


@dataclass(frozen=True)
class DsrRrep:
    route: tuple
    back_path: tuple  # replier -> ... -> origin


@dataclass(frozen=True)
class DsrRerr:
    link: tuple
    back_path: tuple  # detector -> ... -> packet source


@dataclass(frozen=True)
class DsrAck:
    packet_id: int


@dataclass
class MaintenanceEntry:
    pkt: PacketEnvelope
    next_hop: int
    retransmit_count: int = 0
    timer: object = None


@dataclass
class _Discovery:
    attempts: int
    timer: object = None


class DsrAgent(RoutingAgent):
    kind = "dsr"
    reactive = True

    def __init__(self, node, sim, radio, metrics, rng, *, promiscuous: bool = True,
                 ack_timeout: float = 0.5, max_retransmits: int = 3, rreq_retry: float = 2.0,
                 rreq_attempts: int = 3, cache_capacity: int = 4, cache_ttl: float = 30.0, **kw):
        super().__init__(node, sim, radio, metrics, rng, **kw)
        self.promiscuous = promiscuous
        self.ack_timeout = to_us(ack_timeout)
        self.max_retransmits = max_retransmits
        self.rreq_retry = to_us(rreq_retry)
        self.rreq_attempts = rreq_attempts
        self.cache = RouteCache(node, cache_capacity, to_us(cache_ttl))
        self.request_counter = 0
        self.seen_requests: set = set()
        self.pending: dict[int, _Discovery] = {}
        self.maintenance: dict[tuple, MaintenanceEntry] = {}
        self._seen_data: set = set()
        self.salvage_events = 0

    def lookup(self, dst: int) -> Optional[tuple]:
        return self.cache.lookup(dst, self.sim.now)

    def held_packet_ids(self) -> set:
        return super().held_packet_ids() | {m.pkt.packet_id for m in self.maintenance.values()}

    # -- discovery ------------------------------------------------------------------
    def on_no_route(self, dst: int) -> None:
        self.discover(dst)

    def discover(self, dst: int) -> bool:
        if dst == self.node or dst in self.pending:
            return False
        self.pending[dst] = _Discovery(attempts=1)
        self._send_rreq(dst)
        return True

    def _send_rreq(self, dst: int) -> None:
        self.request_counter += 1
        rid = (self.node, self.request_counter)
        self.seen_requests.add(rid)
        self.send_control(DsrRreq(rid, dst, (self.node,)), rreq_size(1))
        self.pending[dst].timer = self.sim.schedule_in(
            self.rreq_retry, lambda: self._discovery_timeout(dst), target=self.node,
            kind="dsr:rreq-timeout")

    def _discovery_timeout(self, dst: int) -> None:
        disc = self.pending.get(dst)
        if disc is None:
            return
        if disc.attempts >= self.rreq_attempts:
            del self.pending[dst]
            self.drop_buffered(dst, "unreachable")
            return
        disc.attempts += 1
        self._send_rreq(dst)

    def handle_rreq(self, m: DsrRreq, sender: int) -> str:
        if m.request_id in self.seen_requests or self.node in m.route_record:
            return "duplicate"
        self.seen_requests.add(m.request_id)
        record = m.route_record + (self.node,)
        back = tuple(reversed(record))
        if m.target == self.node:
            self._send_rrep(DsrRrep(record, back))
            return "reply"
        cached = self.lookup(m.target)
        if cached is not None and is_simple(record + cached[1:]):
            self._send_rrep(DsrRrep(record + cached[1:], back))
            return "reply"
        self.send_control(DsrRreq(m.request_id, m.target, record), rreq_size(len(record)))
        return "rebroadcast"

    def _send_rrep(self, rrep: DsrRrep) -> None:
        i = rrep.back_path.index(self.node)
        self.send_control(rrep, rrep_size(len(rrep.route)), dst=rrep.back_path[i + 1])

    def handle_rrep(self, m: DsrRrep, sender: int) -> str:
        if self.node not in m.route:
            return "dropped"
        self.cache.add(m.route[m.route.index(self.node):], self.sim.now)
        if m.back_path[-1] == self.node:
            target = m.route[-1]
            disc = self.pending.pop(target, None)
            if disc is not None:
                Simulator.cancel(disc.timer)
            self.flush_buffer(target)
            return "complete"
        self._send_rrep(m)
        return "forwarded"

    # -- data path ----------------------------------------------------------------------
    def send_data(self, pkt: PacketEnvelope) -> None:
        pkt.source_route = self.lookup(pkt.dst)
        self.forward_source_routed(pkt)

    def forward_source_routed(self, pkt: PacketEnvelope) -> str:
        route = pkt.source_route
        if route is None or self.node not in route:
            log.debug("node %s not on source route %s of packet %s", self.node, route, pkt.packet_id)
            self.drop(pkt, "corrupt-header")
            return "corrupt"
        i = route.index(self.node)
        if i == len(route) - 1:
            self.deliver(pkt)
            return "delivered"
        if i > 0:
            self.metrics.on_forward()
        entry = MaintenanceEntry(pkt, route[i + 1])
        self.maintenance[(pkt.packet_id, entry.next_hop)] = entry
        self._transmit(entry)
        return "forwarded"

    def _transmit(self, entry: MaintenanceEntry) -> None:
        pkt = entry.pkt
        route = pkt.source_route
        overhear = route if self.promiscuous else ()
        self.transmit_data(pkt, entry.next_hop, data_size(pkt.size, len(route)), overhearers=overhear)
        key = (pkt.packet_id, entry.next_hop)
        entry.timer = self.sim.schedule_in(self.ack_timeout, lambda: self.maintain(key),
                                           target=self.node, kind="dsr:ack-timeout")

    def handle_data(self, frame) -> None:
        pkt: PacketEnvelope = frame.payload
        self.send_control(DsrAck(pkt.packet_id), ACK_SIZE, dst=frame.sender)
        if pkt.packet_id in self._seen_data:
            return
        self._seen_data.add(pkt.packet_id)
        if self.accept_data(frame) is not None:
            self.forward_source_routed(pkt)

    def maintain(self, key: tuple) -> str:
        entry = self.maintenance.get(key)
        if entry is None:
            return "acked"
        if entry.retransmit_count < self.max_retransmits:
            entry.retransmit_count += 1
            self._transmit(entry)
            return "retransmit"
        del self.maintenance[key]
        pkt, hop = entry.pkt, entry.next_hop
        self.cache.remove_link(self.node, hop)
        if pkt.src != self.node:
            back = tuple(reversed(pkt.hops_visited))
            self.send_control(DsrRerr((self.node, hop), back), rerr_size(len(back)), dst=back[1])
        alt = self.lookup(pkt.dst)
        if alt is not None:
            new_route = tuple(pkt.hops_visited) + alt[1:]
            if is_simple(new_route):
                pkt.source_route = new_route
                pkt.salvaged += 1
                self.salvage_events += 1
                log.debug("node %s salvages packet %s onto %s", self.node, pkt.packet_id, new_route)
                self.forward_source_routed(pkt)
                return "salvage"
        if pkt.src == self.node:
            self.buffer_packet(pkt)
            self.discover(pkt.dst)
            return "rediscover"
        self.drop(pkt, "link")
        return "route-error"

    def handle_ack(self, m: DsrAck, sender: int) -> None:
        entry = self.maintenance.pop((m.packet_id, sender), None)
        if entry is not None:
            Simulator.cancel(entry.timer)

    def handle_rerr(self, m: DsrRerr, sender: int) -> None:
        self.cache.remove_link(*m.link)
        if self.node in m.back_path:
            i = m.back_path.index(self.node)
            if i + 1 < len(m.back_path):
                self.send_control(m, rerr_size(len(m.back_path)), dst=m.back_path[i + 1])

    def handle_control(self, msg, sender: int) -> None:
        if isinstance(msg, DsrAck):
            self.handle_ack(msg, sender)
        elif isinstance(msg, DsrRreq):
            self.handle_rreq(msg, sender)
        elif isinstance(msg, DsrRrep):
            self.handle_rrep(msg, sender)
        elif isinstance(msg, DsrRerr):
            self.handle_rerr(msg, sender)

    def overhear(self, route) -> bool:
        """Cache the part of an overheard source route that starts at this node."""
        if not self.promiscuous or route is None or self.node not in route:
            return False
        return self.cache.add(route[route.index(self.node):], self.sim.now)

    def on_overhear(self, frame) -> None:
        self.overhear(getattr(frame.payload, "source_route", None))
