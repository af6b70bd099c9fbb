"""AODV: on-demand hop-by-hop routing with RREQ flooding, RREP back-propagation and RERR."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from ..sim_core import Simulator, to_us
from .base import PacketEnvelope, RoutingAgent

log = logging.getLogger(__name__)

RREQ_SIZE = 24
RREP_SIZE = 20
HELLO_SIZE = 12


def rerr_size(k: int) -> int:
    return 12 + 4 * k


@dataclass
class AodvEntry:
    dst: int
    next_hop: int
    hop_count: int
    dst_seq: int
    expires_at: int
    valid: bool = True


@dataclass(frozen=True)
class Rreq:
    rreq_id: tuple
    origin: int
    origin_seq: int
    dst: int
    dst_seq_known: Optional[int]
    hop_count: int = 0


@dataclass(frozen=True)
class Rrep:
    dst: int
    dst_seq: int
    hop_count: int
    origin: int


@dataclass(frozen=True)
class Rerr:
    unreachable: tuple  # ((dst, dst_seq), ...)


@dataclass(frozen=True)
class Hello:
    seq: int


@dataclass
class _Discovery:
    attempts: int
    timer: object = None


class AodvAgent(RoutingAgent):
    kind = "aodv"
    reactive = True

    def __init__(self, node, sim, radio, metrics, rng, *, hello_interval: float = 1.0,
                 allowed_hello_loss: int = 3, route_lifetime: float = 10.0,
                 rreq_retry: float = 2.0, rreq_attempts: int = 3, seen_expiry: float = 3.0,
                 ack_timeout: float = 1.0, **kw):
        super().__init__(node, sim, radio, metrics, rng, **kw)
        self.hello_interval = to_us(hello_interval)
        self.allowed_hello_loss = allowed_hello_loss
        self.route_lifetime = to_us(route_lifetime)
        self.rreq_retry = to_us(rreq_retry)
        self.rreq_attempts = rreq_attempts
        self.seen_expiry = to_us(seen_expiry)
        self.ack_timeout = to_us(ack_timeout)
        self.seq = 0
        self.rreq_counter = 0
        self.table: dict[int, AodvEntry] = {}
        self.seen: dict[tuple, int] = {}
        self.pending: dict[int, _Discovery] = {}
        self.last_heard: dict[int, int] = {}
        self._awaiting_ack: set[int] = set()

    def start(self) -> None:
        if self.hello_interval > 0:
            first = int(self.rng.uniform(0, self.hello_interval))
            self.sim.schedule(first, self._hello, target=self.node, kind="aodv:hello")

    # -- routing table ------------------------------------------------------------
    def lookup(self, dst: int) -> Optional[AodvEntry]:
        e = self.table.get(dst)
        if e is not None and e.valid and e.expires_at > self.sim.now:
            return e
        return None

    def update_route(self, dst: int, next_hop: int, hops: int, seq: int) -> bool:
        if dst == self.node:
            return False
        e = self.table.get(dst)
        usable = e is not None and e.valid and e.expires_at > self.sim.now
        if usable and not (seq > e.dst_seq or (seq == e.dst_seq and hops < e.hop_count)):
            if e.next_hop == next_hop and seq == e.dst_seq and hops == e.hop_count:
                e.expires_at = self.sim.now + self.route_lifetime
            return False
        if e is not None and not usable and seq < e.dst_seq:
            return False
        self.table[dst] = AodvEntry(dst, next_hop, hops, seq, self.sim.now + self.route_lifetime)
        disc = self.pending.pop(dst, None)
        if disc is not None:
            Simulator.cancel(disc.timer)
        self.flush_buffer(dst)
        return True

    # -- data path ------------------------------------------------------------------
    def send_data(self, pkt: PacketEnvelope) -> None:
        entry = self.lookup(pkt.dst)
        entry.expires_at = self.sim.now + self.route_lifetime
        hop = entry.next_hop
        if self.transmit_data(pkt, hop, self.data_frame_size(pkt)) is None:
            self.drop(pkt, "link")
            if hop not in self._awaiting_ack:
                self._awaiting_ack.add(hop)
                self.sim.schedule_in(self.ack_timeout, lambda: self._ack_timeout(hop),
                                     target=self.node, kind="aodv:ack-timeout")

    def handle_data(self, frame) -> None:
        self.last_heard[frame.sender] = self.sim.now
        pkt = self.accept_data(frame)
        if pkt is None:
            return
        if self.lookup(pkt.dst) is None:
            self.drop(pkt, "no-route")
            e = self.table.get(pkt.dst)
            seq = e.dst_seq if e is not None else 0
            self.send_control(Rerr(((pkt.dst, seq),)), rerr_size(1))
            return
        self.metrics.on_forward()
        self.send_data(pkt)

    def on_no_route(self, dst: int) -> None:
        self.originate_rreq(dst)

    # -- discovery --------------------------------------------------------------------
    def originate_rreq(self, dst: int) -> bool:
        if dst == self.node or dst in self.pending:
            return False
        self.pending[dst] = _Discovery(attempts=1)
        self._send_rreq(dst)
        return True

    def _send_rreq(self, dst: int) -> None:
        self.seq += 1
        self.rreq_counter += 1
        rid = (self.node, self.rreq_counter)
        self.seen[rid] = self.sim.now + self.seen_expiry
        known = self.table[dst].dst_seq if dst in self.table else None
        self.send_control(Rreq(rid, self.node, self.seq, dst, known), RREQ_SIZE)
        self.pending[dst].timer = self.sim.schedule_in(
            self.rreq_retry, lambda: self._rreq_timeout(dst), target=self.node, kind="aodv:rreq-timeout")

    def _rreq_timeout(self, dst: int) -> None:
        disc = self.pending.get(dst)
        if disc is None:
            return
        if disc.attempts >= self.rreq_attempts:
            del self.pending[dst]
            self.drop_buffered(dst, "unreachable")
            return
        disc.attempts += 1
        self._send_rreq(dst)

    def handle_control(self, msg, sender: int) -> None:
        self.last_heard[sender] = self.sim.now
        if isinstance(msg, Hello):
            return
        if isinstance(msg, Rreq):
            self.handle_rreq(msg, sender)
        elif isinstance(msg, Rrep):
            self.handle_rrep(msg, sender)
        elif isinstance(msg, Rerr):
            self.handle_rerr(msg, sender)

    def handle_rreq(self, rreq: Rreq, sender: int) -> str:
        now = self.sim.now
        expiry = self.seen.get(rreq.rreq_id)
        if expiry is not None and expiry > now:
            return "duplicate"
        self.seen[rreq.rreq_id] = now + self.seen_expiry
        if len(self.seen) > 4096:
            self.seen = {k: v for k, v in self.seen.items() if v > now}
        self.update_route(rreq.origin, sender, rreq.hop_count + 1, rreq.origin_seq)
        if rreq.dst == self.node:
            if rreq.dst_seq_known is not None and rreq.dst_seq_known > self.seq:
                self.seq = rreq.dst_seq_known
            self.send_control(Rrep(self.node, self.seq, 0, rreq.origin), RREP_SIZE, dst=sender)
            return "reply"
        e = self.lookup(rreq.dst)
        if e is not None and (rreq.dst_seq_known is None or e.dst_seq >= rreq.dst_seq_known):
            self.send_control(Rrep(rreq.dst, e.dst_seq, e.hop_count, rreq.origin), RREP_SIZE, dst=sender)
            return "reply"
        fwd = Rreq(rreq.rreq_id, rreq.origin, rreq.origin_seq, rreq.dst, rreq.dst_seq_known,
                   rreq.hop_count + 1)
        self.send_control(fwd, RREQ_SIZE)
        return "rebroadcast"

    def handle_rrep(self, rrep: Rrep, sender: int) -> str:
        if rrep.origin != self.node and self.lookup(rrep.origin) is None:
            log.debug("node %s: RREP for %s without reverse route", self.node, rrep.origin)
            return "dropped"
        self.update_route(rrep.dst, sender, rrep.hop_count + 1, rrep.dst_seq)
        if rrep.origin == self.node:
            disc = self.pending.pop(rrep.dst, None)
            if disc is not None:
                Simulator.cancel(disc.timer)
            self.flush_buffer(rrep.dst)
            return "complete"
        rev = self.lookup(rrep.origin)
        self.send_control(Rrep(rrep.dst, rrep.dst_seq, rrep.hop_count + 1, rrep.origin),
                          RREP_SIZE, dst=rev.next_hop)
        return "forwarded"

    # -- maintenance -------------------------------------------------------------------
    def _hello(self) -> None:
        self.send_control(Hello(self.seq), HELLO_SIZE)
        limit = self.allowed_hello_loss * self.hello_interval
        for nb, heard in list(self.last_heard.items()):
            if self.sim.now - heard > limit:
                del self.last_heard[nb]
                self.handle_broken_link(nb)
        self.sim.schedule_in(self.hello_interval, self._hello, target=self.node, kind="aodv:hello")

    def _ack_timeout(self, hop: int) -> None:
        self._awaiting_ack.discard(hop)
        self.handle_broken_link(hop)

    def handle_broken_link(self, lost_next_hop: int) -> list:
        lost = []
        for e in self.table.values():
            if e.valid and e.next_hop == lost_next_hop:
                e.valid = False
                e.dst_seq += 1
                lost.append((e.dst, e.dst_seq))
        if lost:
            self.send_control(Rerr(tuple(lost)), rerr_size(len(lost)))
        return lost

    def handle_rerr(self, rerr: Rerr, sender: int) -> list:
        lost = []
        for dst, seq in rerr.unreachable:
            e = self.table.get(dst)
            if e is not None and e.valid and e.next_hop == sender:
                e.valid = False
                e.dst_seq = max(e.dst_seq, seq)
                lost.append((dst, e.dst_seq))
        if lost:
            self.send_control(Rerr(tuple(lost)), rerr_size(len(lost)))
        return lost
