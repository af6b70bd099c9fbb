"""CBR traffic generation and delivery metrics (PDR, throughput, delay, NRL)."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

INF = math.inf

# Aggregate offered load (packets/s) and start stagger between flows, fitted to
# the sent column 12208 / 24416 / 36622 / 48830 at 25 / 50 / 75 / 100 s.
CALIBRATED_RATE = 488.3
CALIBRATED_STAGGER = 0.002


class AccountingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CbrFlow:
    src: int
    dst: int
    packet_size: int = 64
    interval: float = 1.0
    start_at: float = 0.0
    stop_at: float = 1.0

    def __post_init__(self):
        if not self.interval > 0:
            raise ValueError("interval must be positive")
        if not self.start_at < self.stop_at:
            raise ValueError("start_at must precede stop_at")
        if self.src == self.dst:
            raise ValueError("flow source and sink must differ")
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")

    def send_times_us(self) -> list[int]:
        """Emission instants in microseconds over the half-open window [start, stop)."""
        start_us = int(round(self.start_at * 1e6))
        stop_us = int(round(self.stop_at * 1e6))
        step = self.interval * 1e6
        out = []
        k = 0
        while True:
            t = start_us + int(round(k * step))
            if t >= stop_us:
                return out
            out.append(t)
            k += 1

    def count_until(self, t_end: float) -> int:
        return sum(1 for t in self.send_times_us() if t < t_end * 1e6)


def spawn_flows(n_flows: int, nodes: Sequence[int], rng: random.Random, *,
                rate: float = CALIBRATED_RATE, packet_size: int = 64,
                start_at: float = 0.0, stop_at: float = 1.0,
                stagger: float = CALIBRATED_STAGGER) -> list[CbrFlow]:
    """Draw ``n_flows`` node-disjoint (src, dst) pairs sharing an aggregate ``rate``.

    Every flow runs at ``rate / n_flows`` packets per second; flow ``i`` starts
    ``i * stagger`` seconds after ``start_at``.
    """
    if n_flows < 0:
        raise ValueError("n_flows must be nonnegative")
    if n_flows == 0:
        return []
    if 2 * n_flows > len(nodes):
        raise ValueError(f"{n_flows} disjoint flows need {2 * n_flows} nodes, have {len(nodes)}")
    if not rate > 0:
        raise ValueError("rate must be positive")
    picked = rng.sample(list(nodes), 2 * n_flows)
    interval = n_flows / rate
    return [CbrFlow(src=picked[i], dst=picked[n_flows + i], packet_size=packet_size,
                    interval=interval, start_at=start_at + i * stagger, stop_at=stop_at)
            for i in range(n_flows)]


# -- metric formulas ------------------------------------------------------------

def pdr(sent: int, received: int) -> float:
    if sent < 0 or received < 0:
        raise AccountingError("negative packet count")
    if received > sent:
        raise AccountingError(f"received {received} exceeds sent {sent}")
    return received / sent if sent else 0.0


def paper_pdr(sent: int, received: int) -> float:
    """Sent over received, times 100, to two decimals (the tabulated convention)."""
    if received <= 0:
        return INF
    return round(sent / received * 100, 2)


def throughput(data_bytes_received: float, duration: float) -> float:
    if not duration > 0:
        raise ValueError("duration must be positive")
    return data_bytes_received / duration


def avg_e2e_delay(samples: Iterable[float]) -> float:
    samples = list(samples)
    if any(s < 0 for s in samples):
        raise AccountingError("negative end-to-end delay sample")
    if not samples:
        return INF
    return math.fsum(samples) / len(samples)


def nrl(control_tx: int, received: int) -> float:
    if received == 0:
        return INF if control_tx > 0 else 0.0
    return control_tx / received


# -- per-run accumulation ---------------------------------------------------------

OUTSTANDING, RECEIVED, DROPPED = "outstanding", "received", "dropped"


@dataclass
class MetricsAccumulator:
    """Counters for one run. Each data packet ends in exactly one state.

    A delivery overrides an earlier drop of another copy of the same packet.
    """

    sent: int = 0
    forwarded: int = 0
    control_tx: int = 0
    control_bytes: int = 0
    data_bytes_received: int = 0
    latency_samples: list = field(default_factory=list)
    drops: Counter = field(default_factory=Counter)
    state: dict = field(default_factory=dict)
    created: dict = field(default_factory=dict)
    drop_reason: dict = field(default_factory=dict)
    _latency_of: dict = field(default_factory=dict)

    @property
    def received(self) -> int:
        return len(self._latency_of)

    @property
    def dropped(self) -> int:
        return sum(self.drops.values())

    @property
    def outstanding(self) -> int:
        return self.sent - self.received - self.dropped

    def on_sent(self, pkt) -> None:
        if pkt.packet_id in self.state:
            raise AccountingError(f"packet id {pkt.packet_id} sent twice")
        self.sent += 1
        self.state[pkt.packet_id] = OUTSTANDING
        self.created[pkt.packet_id] = pkt.created_at

    def on_deliver(self, pkt, now_us: int) -> bool:
        """Record a delivery; False for a duplicate."""
        pid = pkt.packet_id
        st = self.state.get(pid)
        if st is None:
            raise AccountingError(f"delivery of unknown packet {pid}")
        if st == RECEIVED:
            return False
        if st == DROPPED:
            self.drops[self.drop_reason.pop(pid)] -= 1
        self.state[pid] = RECEIVED
        delay = (now_us - pkt.created_at) / 1e6
        if delay < 0:
            raise AccountingError("negative end-to-end delay sample")
        self._latency_of[pid] = delay
        self.latency_samples.append(delay)
        self.data_bytes_received += pkt.size
        return True

    def on_drop(self, pkt, reason: str) -> None:
        pid = pkt.packet_id
        if self.state.get(pid) != OUTSTANDING:
            return
        self.state[pid] = DROPPED
        self.drop_reason[pid] = reason
        self.drops[reason] += 1

    def on_forward(self) -> None:
        self.forwarded += 1

    def on_control(self, size: int) -> None:
        self.control_tx += 1
        self.control_bytes += size

    def outstanding_ids(self) -> set:
        return {pid for pid, st in self.state.items() if st == OUTSTANDING}

    def check_conservation(self, held_ids: set | None = None) -> None:
        """sent == received + dropped + outstanding, and nothing outstanding is unaccounted for."""
        counts = Counter(self.state.values())
        if counts[RECEIVED] != self.received or counts[DROPPED] != self.dropped:
            raise AccountingError("state table disagrees with counters")
        if self.sent != self.received + self.dropped + counts[OUTSTANDING]:
            raise AccountingError("sent != received + dropped + outstanding")
        if held_ids is not None:
            missing = self.outstanding_ids() - held_ids
            if missing:
                raise AccountingError(f"{len(missing)} outstanding packets are not buffered "
                                      f"or in flight, e.g. {sorted(missing)[:5]}")
