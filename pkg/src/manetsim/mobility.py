"""Node positions over time: random waypoint chains and SUMO FCD traces."""

from __future__ import annotations

import math
import random
import xml.parsers.expat
from bisect import bisect_right
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union

import numpy as np


class MobilityError(ValueError):
    pass


class FcdParseError(MobilityError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass(frozen=True)
class Waypoint:
    at: float
    pos: Position


class MobilitySource:
    """Piecewise-linear position lookup for a fixed set of nodes.

    Node ids are ``0..n-1``; ``labels`` keeps the original identifiers
    (vehicle ids for traces). Queries before the first or after the last
    waypoint are clamped. ``active_from[i]`` is the first sample time of node
    ``i``; a node is radio-silent before it.
    """

    def __init__(self, chains: Sequence[Sequence[Waypoint]], *, kind: str = "random-waypoint",
                 arena: tuple[float, float] | None = None, labels: Sequence[str] | None = None,
                 max_speed: float | None = None):
        if not chains:
            raise MobilityError("mobility source needs at least one node")
        self.kind = kind
        self.arena = arena
        self.max_speed = max_speed
        self.labels = list(labels) if labels is not None else [str(i) for i in range(len(chains))]
        self._t: list[list[float]] = []
        self._x: list[list[float]] = []
        self._y: list[list[float]] = []
        for i, chain in enumerate(chains):
            if not chain:
                raise MobilityError(f"node {i} has no waypoints")
            ts = [float(w.at) for w in chain]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise MobilityError(f"node {i}: waypoint times must strictly increase")
            self._t.append(ts)
            self._x.append([float(w.pos.x) for w in chain])
            self._y.append([float(w.pos.y) for w in chain])
        self.active_from = [ts[0] for ts in self._t]
        # padded arrays for vectorised lookups
        width = max(len(ts) for ts in self._t)
        n = len(self._t)
        self._T = np.full((n, width), np.inf)
        self._X = np.zeros((n, width))
        self._Y = np.zeros((n, width))
        for i in range(n):
            k = len(self._t[i])
            self._T[i, :k] = self._t[i]
            self._X[i, :k] = self._x[i]
            self._Y[i, :k] = self._y[i]
            self._X[i, k:] = self._x[i][-1]
            self._Y[i, k:] = self._y[i][-1]
        self._len = np.array([len(ts) for ts in self._t])
        self._rows = np.arange(n)
        self._cache_t: float | None = None
        self._cache_xy: np.ndarray | None = None

    @classmethod
    def static(cls, points: Iterable[tuple[float, float]], arena=None) -> "MobilitySource":
        chains = [[Waypoint(0.0, Position(float(x), float(y)))] for x, y in points]
        return cls(chains, kind="static", arena=arena, max_speed=0.0)

    @property
    def n_nodes(self) -> int:
        return len(self._t)

    def waypoints(self, node: int) -> list[Waypoint]:
        self._check(node)
        return [Waypoint(t, Position(x, y))
                for t, x, y in zip(self._t[node], self._x[node], self._y[node])]

    def _check(self, node: int) -> None:
        if not isinstance(node, (int, np.integer)) or not 0 <= node < len(self._t):
            raise MobilityError(f"unknown node {node!r}")

    def xy_at(self, node: int, t: float) -> tuple[float, float]:
        self._check(node)
        ts = self._t[node]
        k = bisect_right(ts, t)
        if k == 0:
            return self._x[node][0], self._y[node][0]
        if k == len(ts):
            return self._x[node][-1], self._y[node][-1]
        t0, t1 = ts[k - 1], ts[k]
        f = (t - t0) / (t1 - t0)
        xs, ys = self._x[node], self._y[node]
        return xs[k - 1] + f * (xs[k] - xs[k - 1]), ys[k - 1] + f * (ys[k] - ys[k - 1])

    def position_at(self, node: int, t: float) -> Position:
        return Position(*self.xy_at(node, t))

    def positions_at(self, t: float) -> np.ndarray:
        """All node positions at ``t`` as an ``(n, 2)`` array."""
        if t == self._cache_t:
            return self._cache_xy
        k = (self._T <= t).sum(axis=1)
        hi = np.minimum(k, self._len - 1)
        lo = np.maximum(k - 1, 0)
        rows = self._rows
        t0 = self._T[rows, lo]
        t1 = self._T[rows, hi]
        span = np.where(hi > lo, t1 - t0, 1.0)
        f = np.where(hi > lo, (t - t0) / span, 0.0)
        x0, y0 = self._X[rows, lo], self._Y[rows, lo]
        x = x0 + f * (self._X[rows, hi] - x0)
        y = y0 + f * (self._Y[rows, hi] - y0)
        xy = np.column_stack((x, y))
        self._cache_t, self._cache_xy = t, xy
        return xy

    def is_active(self, node: int, t: float) -> bool:
        return t >= self.active_from[node]


def generate_random_waypoint(n_nodes: int, arena: tuple[float, float], speed: tuple[float, float],
                             pause: float, duration: float, rng: random.Random) -> MobilitySource:
    """Random waypoint chains covering ``[0, duration]`` for every node."""
    width, height = arena
    if n_nodes < 1:
        raise MobilityError("n_nodes must be >= 1")
    if width <= 0 or height <= 0:
        raise MobilityError(f"arena {width}x{height} has zero area")
    vmin, vmax = speed
    if vmin < 0 or vmin > vmax:
        raise MobilityError(f"bad speed range {speed}")
    if duration <= 0:
        raise MobilityError("duration must be positive")
    if pause < 0:
        raise MobilityError("pause must be nonnegative")

    chains = []
    for _ in range(n_nodes):
        pos = Position(rng.uniform(0, width), rng.uniform(0, height))
        t = 0.0
        chain = [Waypoint(t, pos)]
        while t < duration and vmax > 0:
            dest = Position(rng.uniform(0, width), rng.uniform(0, height))
            v = rng.uniform(vmin, vmax)
            dist = math.hypot(dest.x - pos.x, dest.y - pos.y)
            if v <= 0 or dist == 0:
                break
            t += dist / v
            chain.append(Waypoint(t, dest))
            pos = dest
            if pause > 0:
                t += pause
                chain.append(Waypoint(t, pos))
        chains.append(chain)
    return MobilitySource(chains, kind="random-waypoint", arena=(width, height), max_speed=vmax)


def load_fcd_trace(stream: Union[str, bytes, IO]) -> MobilitySource:
    """Parse SUMO ``fcd-export`` XML (``timestep``/``vehicle`` subset)."""
    parser = xml.parsers.expat.ParserCreate()
    chains: dict[str, list[Waypoint]] = {}
    order: list[str] = []
    state = {"time": None, "last": None, "in_export": False}

    def line() -> int:
        return parser.CurrentLineNumber

    def number(attrs: dict, name: str, what: str) -> float:
        if name not in attrs:
            raise FcdParseError(f"{what} missing attribute {name!r}", line())
        try:
            value = float(attrs[name])
        except ValueError:
            raise FcdParseError(f"{what} attribute {name}={attrs[name]!r} is not a number", line()) from None
        if not math.isfinite(value):
            raise FcdParseError(f"{what} attribute {name} is not finite", line())
        return value

    def start(tag: str, attrs: dict) -> None:
        if tag == "fcd-export":
            state["in_export"] = True
        elif tag == "timestep":
            t = number(attrs, "time", "timestep")
            if state["last"] is not None and t <= state["last"]:
                raise FcdParseError(f"timestep {t} does not follow {state['last']}", line())
            state["time"] = state["last"] = t
        elif tag == "vehicle":
            if state["time"] is None:
                raise FcdParseError("vehicle outside a timestep", line())
            vid = attrs.get("id")
            if vid is None:
                raise FcdParseError("vehicle missing attribute 'id'", line())
            x = number(attrs, "x", f"vehicle {vid}")
            y = number(attrs, "y", f"vehicle {vid}")
            chain = chains.get(vid)
            if chain is None:
                chain = chains[vid] = []
                order.append(vid)
            elif chain[-1].at == state["time"]:
                raise FcdParseError(f"vehicle {vid} repeated within timestep", line())
            chain.append(Waypoint(state["time"], Position(x, y)))

    def end(tag: str) -> None:
        if tag == "timestep":
            state["time"] = None

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        parser.Parse(stream.read() if hasattr(stream, "read") else stream, True)
    except xml.parsers.expat.ExpatError as exc:
        raise FcdParseError(xml.parsers.expat.ErrorString(exc.code), exc.lineno) from None
    if not order:
        raise FcdParseError("trace contains no vehicles", line())
    return MobilitySource([chains[v] for v in order], kind="trace", labels=order)


def to_fcd(source: MobilitySource, times: Sequence[float]) -> str:
    """Sample ``source`` on ``times`` and render it as FCD XML."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<fcd-export>"]
    for t in times:
        lines.append(f'    <timestep time="{float(t)!r}">')
        for node in range(source.n_nodes):
            if not source.is_active(node, t):
                continue
            x, y = source.xy_at(node, t)
            lines.append(f'        <vehicle id="{source.labels[node]}" x="{float(x)!r}" '
                         f'y="{float(y)!r}" speed="0.0"/>')
        lines.append("    </timestep>")
    lines.append("</fcd-export>")
    return "\n".join(lines) + "\n"
