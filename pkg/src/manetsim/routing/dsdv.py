"""DSDV: proactive distance vector with destination sequence numbers.

Valid routes carry even sequence numbers, broken ones odd. Periodic full
dumps advertise the whole table; metric changes are pushed as incremental
updates after a settling delay, broken routes immediately.

A newer sequence number that arrives over a longer path is not adopted while
the current next hop is still advertising; this damps the route flapping that
otherwise follows from updates travelling faster along badly phased chains.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from ..sim_core import Simulator, to_us
from .base import BufferedPacket, PacketEnvelope, RoutingAgent

log = logging.getLogger(__name__)

INFINITY = math.inf
FULL, INCREMENTAL = "full-dump", "incremental"


def update_size(n_entries: int) -> int:
    return 12 + 12 * n_entries


@dataclass
class DsdvEntry:
    dst: int
    next_hop: int
    hops: float
    seq_no: int
    installed_at: int
    settling_deadline: Optional[int] = None
    changed: bool = False

    @property
    def valid(self) -> bool:
        return self.hops != INFINITY


@dataclass(frozen=True)
class DsdvUpdate:
    kind: str
    entries: tuple  # ((dst, hops, seq_no), ...)
    sender: int


class DsdvAgent(RoutingAgent):
    kind = "dsdv"
    reactive = False

    def __init__(self, node, sim, radio, metrics, rng, *, update_interval: float = 15.0,
                 update_jitter: float = 1.0, settling_time: float = 5.0,
                 buffer_timeout: float = 5.0, allowed_update_loss: int = 3,
                 first_update_within: float = 1.0, **kw):
        super().__init__(node, sim, radio, metrics, rng, **kw)
        self.update_interval = to_us(update_interval)
        self.update_jitter = to_us(update_jitter)
        self.settling_time = to_us(settling_time)
        self.buffer_timeout = to_us(buffer_timeout)
        self.allowed_update_loss = allowed_update_loss
        self.first_update_within = to_us(first_update_within)
        self.table: dict[int, DsdvEntry] = {node: DsdvEntry(node, node, 0, 0, 0)}
        self.last_heard: dict[int, int] = {}
        self._incremental = None
        self.ignored_self_adverts = 0
        self.deferred_adverts = 0
        self.hold_window = self.update_interval + 2 * self.update_jitter

    @property
    def seq_no(self) -> int:
        return self.table[self.node].seq_no

    def start(self) -> None:
        first = int(self.rng.uniform(0, self.first_update_within))
        self.sim.schedule(first, self._periodic, target=self.node, kind="dsdv:periodic")

    # -- updates ------------------------------------------------------------------
    def _advertise(self, kind: str, entries: Iterable[DsdvEntry]) -> DsdvUpdate:
        upd = DsdvUpdate(kind, tuple((e.dst, e.hops, e.seq_no) for e in entries), self.node)
        self.send_control(upd, update_size(len(upd.entries)))
        return upd

    def periodic_update(self) -> DsdvUpdate:
        self.table[self.node].seq_no += 2
        upd = self._advertise(FULL, sorted(self.table.values(), key=lambda e: e.dst))
        for e in self.table.values():
            e.changed = False
            e.settling_deadline = None
        Simulator.cancel(self._incremental)
        self._incremental = None
        return upd

    def _periodic(self) -> None:
        self.periodic_update()
        limit = self.allowed_update_loss * self.update_interval + self.update_jitter
        for nb, heard in sorted(self.last_heard.items()):
            if self.sim.now - heard > limit:
                del self.last_heard[nb]
                self.handle_link_break(nb)
        delay = self.update_interval + int(self.rng.uniform(-self.update_jitter, self.update_jitter))
        self.sim.schedule_in(max(1, delay), self._periodic, target=self.node, kind="dsdv:periodic")

    def incremental_update(self) -> Optional[DsdvUpdate]:
        self._incremental = None
        changed = sorted((e for e in self.table.values() if e.changed), key=lambda e: e.dst)
        if not changed:
            return None
        for e in changed:
            e.changed = False
            e.settling_deadline = None
        return self._advertise(INCREMENTAL, changed)

    def _trigger_incremental(self, immediate: bool) -> None:
        if immediate:
            Simulator.cancel(self._incremental)
            self.incremental_update()
        elif self._incremental is None:
            deadline = self.sim.now + self.settling_time
            for e in self.table.values():
                if e.changed and e.settling_deadline is None:
                    e.settling_deadline = deadline
            self._incremental = self.sim.schedule(deadline, self.incremental_update,
                                                  target=self.node, kind="dsdv:incremental")

    def _confirmed(self, e: DsdvEntry) -> bool:
        heard = self.last_heard.get(e.next_hop)
        return e.valid and heard is not None and self.sim.now - heard <= self.hold_window

    def merge_update(self, upd: DsdvUpdate, sender: int) -> list:
        """Apply an advertisement heard from ``sender``; returns adopted destinations."""
        self.last_heard[sender] = self.sim.now
        adopted, significant, broken = [], False, False
        for dst, hops, seq in upd.entries:
            if dst == self.node:
                if seq > self.seq_no:
                    self.ignored_self_adverts += 1
                    log.debug("node %s ignores advert of itself with seq %s > %s",
                              self.node, seq, self.seq_no)
                continue
            cand = hops + 1
            e = self.table.get(dst)
            if e is not None:
                if not (seq > e.seq_no or (seq == e.seq_no and cand < e.hops)):
                    continue
                if seq > e.seq_no and cand > e.hops and sender != e.next_hop and self._confirmed(e):
                    # newer but longer: keep the shorter route while its next hop is still
                    # advertising, the same sequence number will arrive along it shortly
                    self.deferred_adverts += 1
                    continue
            metric_changed = e is None or e.hops != cand or e.next_hop != sender
            new = DsdvEntry(dst, sender, cand, seq, self.sim.now)
            self.table[dst] = new
            adopted.append(dst)
            if metric_changed:
                new.changed = True
                significant = True
                broken |= cand == INFINITY
        if significant:
            self._trigger_incremental(immediate=broken)
        if adopted:
            self.flush_buffer()
        return adopted

    def handle_link_break(self, lost_neighbor: int) -> list:
        broken = []
        for e in self.table.values():
            if e.dst != self.node and e.next_hop == lost_neighbor and e.valid:
                e.hops = INFINITY
                e.seq_no += 1
                e.changed = True
                broken.append(e.dst)
        if broken:
            self._trigger_incremental(immediate=True)
        return broken

    def handle_control(self, msg, sender: int) -> None:
        if isinstance(msg, DsdvUpdate):
            self.merge_update(msg, sender)

    # -- data path ------------------------------------------------------------------
    def lookup(self, dst: int) -> Optional[DsdvEntry]:
        e = self.table.get(dst)
        if e is None or not e.valid or dst == self.node:
            return None
        return e

    def send_data(self, pkt: PacketEnvelope) -> None:
        e = self.lookup(pkt.dst)
        if self.transmit_data(pkt, e.next_hop, self.data_frame_size(pkt)) is None:
            self.drop(pkt, "link")

    def buffer_packet(self, pkt: PacketEnvelope) -> BufferedPacket:
        item = super().buffer_packet(pkt)

        def expire():
            if self.buffer.remove(item):
                self.drop(item.pkt, "no-route")

        item.timer = self.sim.schedule_in(self.buffer_timeout, expire, target=self.node,
                                          kind="dsdv:buffer-timeout")
        return item

    def on_no_route(self, dst: int) -> None:
        pass

    def handle_data(self, frame) -> None:
        pkt = self.accept_data(frame)
        if pkt is None:
            return
        if self.lookup(pkt.dst) is None:
            self.buffer_packet(pkt)
            return
        self.metrics.on_forward()
        self.send_data(pkt)


def next_hop_cycles(agents) -> list:
    """Cycles in the per-destination next-hop graph among equal-sequence valid entries."""
    cycles = []
    by_node = {a.node: a for a in agents}
    dsts = sorted({d for a in agents for d in a.table})
    for d in dsts:
        nxt = {}
        for a in agents:
            e = a.table.get(d)
            if e is not None and e.valid and a.node != d:
                nxt[a.node] = (e.next_hop, e.seq_no)
        for start in nxt:
            seen = [start]
            cur = start
            while cur in nxt:
                hop, seq = nxt[cur]
                if hop not in nxt or nxt[hop][1] != seq or hop not in by_node:
                    break
                if hop in seen:
                    cyc = seen[seen.index(hop):]
                    if min(cyc) == start:
                        cycles.append((d, tuple(cyc)))
                    break
                seen.append(hop)
                cur = hop
    return cycles
