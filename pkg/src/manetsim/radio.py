"""Shared wireless medium: unit-disk connectivity, serialization delay, iid frame loss."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np

from .mobility import MobilitySource
from .sim_core import US_PER_S, Simulator

CONTROL = "control"
DATA = "data"


@dataclass(frozen=True)
class ChannelConfig:
    range: float = 250.0
    data_rate: float = 2_000_000.0
    loss_prob: float = 0.0
    prop_delay: float = 0.0

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"range must be positive, got {self.range}")
        if not self.data_rate > 0:
            raise ValueError(f"data_rate must be positive, got {self.data_rate}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError(f"loss_prob must be in [0, 1], got {self.loss_prob}")
        if self.prop_delay < 0:
            raise ValueError("prop_delay must be nonnegative")


@dataclass
class Frame:
    sender: int
    kind: str
    size: int
    payload: Any
    sent_at: int = 0

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("frame size must be positive")


@dataclass(frozen=True)
class Delivery:
    receiver: int
    at: int


class Radio:
    """Delivers frames between agents registered in ``self.receivers``.

    Receivers expose ``on_frame_received(frame)`` and, for promiscuous
    listening, ``on_overhear(frame)``.
    """

    def __init__(self, sim: Simulator, mobility: MobilitySource, config: ChannelConfig,
                 loss_rng: random.Random):
        self.sim = sim
        self.mobility = mobility
        self.config = config
        self.rng = loss_rng
        self.receivers: dict[int, Any] = {}
        self.in_flight: Counter = Counter()  # packet_id -> data frames on the air
        self._r2 = config.range * config.range
        self._active_from = np.asarray(mobility.active_from, dtype=float)
        self._all_active_at = float(self._active_from.max())

    def attach(self, node: int, agent: Any) -> None:
        self.receivers[node] = agent

    # -- geometry -----------------------------------------------------------
    def _distance(self, a: int, b: int, t: float) -> float:
        ax, ay = self.mobility.xy_at(a, t)
        bx, by = self.mobility.xy_at(b, t)
        return math.hypot(ax - bx, ay - by)

    def in_range(self, a: int, b: int, t_us: int) -> bool:
        t = t_us / US_PER_S
        mob = self.mobility
        if not (mob.is_active(a, t) and mob.is_active(b, t)):
            return False
        ax, ay = mob.xy_at(a, t)
        bx, by = mob.xy_at(b, t)
        return (ax - bx) ** 2 + (ay - by) ** 2 <= self._r2

    def _neighbor_array(self, node: int, t: float) -> tuple[np.ndarray, np.ndarray]:
        xy = self.mobility.positions_at(t)
        d2 = ((xy - xy[node]) ** 2).sum(axis=1)
        mask = d2 <= self._r2
        mask[node] = False
        idx = np.flatnonzero(mask)
        if t < self._all_active_at:
            idx = idx[self._active_from[idx] <= t]
        return idx, d2[idx]

    def neighbors(self, node: int, t_us: int) -> set[int]:
        self.mobility._check(node)
        t = t_us / US_PER_S
        if not self.mobility.is_active(node, t):
            return set()
        idx, _ = self._neighbor_array(node, t)
        return {int(j) for j in idx}

    # -- transmission ---------------------------------------------------------
    def tx_delay(self, size: int, distance: float = 0.0) -> int:
        seconds = size * 8 / self.config.data_rate + self.config.prop_delay * distance
        return max(1, int(round(seconds * US_PER_S)))

    def _lost(self) -> bool:
        p = self.config.loss_prob
        if p <= 0.0:
            return False
        return self.rng.random() < p

    def _schedule(self, frame: Frame, receiver: int, at: int, overhear: bool = False) -> Delivery:
        agent = self.receivers.get(receiver)
        data_id = frame.payload.packet_id if frame.kind == DATA and not overhear else None
        if data_id is not None:
            self.in_flight[data_id] += 1

        def fire():
            if data_id is not None:
                self.in_flight[data_id] -= 1
                if not self.in_flight[data_id]:
                    del self.in_flight[data_id]
            if agent is None:
                return
            if overhear:
                agent.on_overhear(frame)
            else:
                agent.on_frame_received(frame)

        kind = f"{'overhear' if overhear else 'rx'}:{type(frame.payload).__name__}"
        self.sim.schedule(at, fire, target=receiver, kind=kind)
        return Delivery(receiver, at)

    def broadcast(self, frame: Frame, t_us: Optional[int] = None) -> list[Delivery]:
        t_us = self.sim.now if t_us is None else t_us
        frame.sent_at = t_us
        t = t_us / US_PER_S
        if not self.mobility.is_active(frame.sender, t):
            return []
        idx, d2 = self._neighbor_array(frame.sender, t)
        out = []
        base = self.tx_delay(frame.size)
        prop = self.config.prop_delay
        for j, dd in zip(idx.tolist(), d2.tolist()):
            if self._lost():
                continue
            at = t_us + (self.tx_delay(frame.size, math.sqrt(dd)) if prop else base)
            out.append(self._schedule(frame, j, at))
        return out

    def unicast(self, frame: Frame, dst: int, t_us: Optional[int] = None,
                overhearers: Iterable[int] = ()) -> Optional[Delivery]:
        """Send to ``dst``; returns None when out of range or lost.

        ``overhearers`` are candidate promiscuous listeners; each one in range
        gets an independent loss draw and an ``on_overhear`` callback.
        """
        t_us = self.sim.now if t_us is None else t_us
        frame.sent_at = t_us
        sender = frame.sender
        delivery = None
        if self.in_range(sender, dst, t_us) and not self._lost():
            dist = self._distance(sender, dst, t_us / US_PER_S) if self.config.prop_delay else 0.0
            delivery = self._schedule(frame, dst, t_us + self.tx_delay(frame.size, dist))
        for j in overhearers:
            if j == sender or j == dst or not self.in_range(sender, j, t_us) or self._lost():
                continue
            dist = self._distance(sender, j, t_us / US_PER_S) if self.config.prop_delay else 0.0
            self._schedule(frame, j, t_us + self.tx_delay(frame.size, dist), overhear=True)
        return delivery
