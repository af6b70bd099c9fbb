"""Event engine: integer-microsecond clock, (time, seq) ordered queue, seeded streams."""

from __future__ import annotations

import hashlib
import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

US_PER_S = 1_000_000


def to_us(seconds: float) -> int:
    """Convert seconds to integer microseconds (round half to even)."""
    if seconds < 0:
        raise ValueError(f"negative time: {seconds}")
    return int(round(seconds * US_PER_S))


def to_s(us: int) -> float:
    return us / US_PER_S


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(eq=False)
class SimEvent:
    fire_at: int
    seq: int
    target: object
    action: Callable[[], None]
    kind: str = "event"
    cancelled: bool = False
    fired: bool = False

    def __lt__(self, other: "SimEvent") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)


class Simulator:
    """Single-threaded discrete-event loop.

    Events at equal times run in insertion order. Time is kept in integer
    microseconds; ``now_s`` gives the seconds view.
    """

    def __init__(self, trace: Optional[TextIO] = None):
        self.now = 0
        self._queue: list[tuple[int, int, SimEvent]] = []
        self._seq = itertools.count()
        self.trace = trace
        self.executed = 0

    @property
    def now_s(self) -> float:
        return self.now / US_PER_S

    def schedule(self, fire_at: int, action: Callable[[], None], *,
                 target: object = "scheduler", kind: str = "event") -> SimEvent:
        if fire_at < self.now:
            raise SchedulingError(f"cannot schedule at {fire_at} us, clock is {self.now} us")
        ev = SimEvent(fire_at, next(self._seq), target, action, kind)
        heapq.heappush(self._queue, (fire_at, ev.seq, ev))
        return ev

    def schedule_in(self, delay_us: int, action: Callable[[], None], *,
                    target: object = "scheduler", kind: str = "event") -> SimEvent:
        return self.schedule(self.now + delay_us, action, target=target, kind=kind)

    @staticmethod
    def cancel(handle: Optional[SimEvent]) -> bool:
        """Cancel a pending event; True iff it had not fired and now never will."""
        if handle is None or handle.fired or handle.cancelled:
            return False
        handle.cancelled = True
        return True

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, t_end: int) -> int:
        """Execute every event with ``fire_at <= t_end``; leave the clock at ``t_end``."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before clock {self.now}")
        count = 0
        queue = self._queue
        trace = self.trace
        while queue and queue[0][0] <= t_end:
            fire_at, _, ev = heapq.heappop(queue)
            if ev.cancelled:
                continue
            self.now = fire_at
            ev.fired = True
            if trace is not None:
                trace.write(f"{fire_at},{ev.target},{ev.kind}\n")
            ev.action()
            count += 1
        self.now = t_end
        self.executed += count
        return count


STREAMS = ("mobility", "loss", "traffic", "protocol-jitter")


def rng_stream(seed: int, stream: str) -> random.Random:
    """Independent generator per (seed, purpose); same inputs give the same sequence."""
    digest = hashlib.sha256(f"{int(seed)}/{stream}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class RngStreams:
    seed: int
    _cache: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, stream: str) -> random.Random:
        if stream not in self._cache:
            self._cache[stream] = rng_stream(self.seed, stream)
        return self._cache[stream]
