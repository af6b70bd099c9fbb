"""Scenario configuration, single runs and (protocol x time x seed) sweeps."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence, TextIO

from . import PROTOCOLS
from .metrics import (CALIBRATED_RATE, CALIBRATED_STAGGER, INF, AccountingError, CbrFlow,
                      MetricsAccumulator, avg_e2e_delay, nrl, paper_pdr, pdr, spawn_flows,
                      throughput)
from .mobility import MobilitySource, generate_random_waypoint, load_fcd_trace
from .radio import ChannelConfig, Radio
from .routing import AGENTS
from .routing.base import PacketEnvelope
from .sim_core import RngStreams, Simulator, to_us


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


@dataclass
class MobilityConfig:
    model: str = "rwp"  # rwp | trace | static
    speed_min: float = 5.0
    speed_max: float = 15.0
    pause: float = 1.0
    trace_path: Optional[str] = None
    positions: Optional[list] = None


@dataclass
class FlowConfig:
    n_flows: int = 10
    rate: float = CALIBRATED_RATE  # aggregate packets/s over all flows
    packet_size: int = 64
    start: float = 0.0
    stop: Optional[float] = None  # defaults to the run duration
    stagger: float = CALIBRATED_STAGGER


@dataclass
class ScenarioConfig:
    protocol: str = "aodv"
    n_nodes: int = 100
    arena: tuple = (867.0, 561.0)
    duration: float = 25.0
    seed: int = 1
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    flows: FlowConfig = field(default_factory=FlowConfig)
    buffer_size: int = 64
    ttl: int = 32
    protocol_options: dict = field(default_factory=dict)

    def validate(self) -> "ScenarioConfig":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if len(self.arena) != 2 or min(self.arena) <= 0:
            raise ConfigError(f"arena must be two positive lengths, got {self.arena}")
        if self.buffer_size < 1 or self.ttl < 1:
            raise ConfigError("buffer_size and ttl must be >= 1")
        m = self.mobility
        if m.model == "rwp":
            if self.n_nodes < 1:
                raise ConfigError("n_nodes must be >= 1")
            if m.speed_min < 0 or m.speed_min > m.speed_max or m.pause < 0:
                raise ConfigError("invalid random waypoint speed/pause")
        elif m.model == "trace":
            if not m.trace_path or not os.path.isfile(m.trace_path):
                raise ConfigError(f"trace file not found: {m.trace_path!r}")
        elif m.model == "static":
            if not m.positions:
                raise ConfigError("static mobility needs positions")
        else:
            raise ConfigError(f"unknown mobility model {m.model!r}")
        f = self.flows
        if f.n_flows < 0 or f.packet_size <= 0 or not f.rate > 0:
            raise ConfigError("invalid flow settings")
        if f.stop is not None and f.stop <= f.start:
            raise ConfigError("flow stop must follow flow start")
        n = len(m.positions) if m.model == "static" else self.n_nodes if m.model == "rwp" else None
        if n is not None and 2 * f.n_flows > n:
            raise ConfigError(f"{f.n_flows} disjoint flows need {2 * f.n_flows} nodes, have {n}")
        unknown = set(self.protocol_options) - _agent_options(self.protocol)
        if unknown:
            raise ConfigError(f"unknown {self.protocol} options: {sorted(unknown)}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arena"] = list(self.arena)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        try:
            if "mobility" in data:
                data["mobility"] = MobilityConfig(**data["mobility"])
            if "channel" in data:
                data["channel"] = ChannelConfig(**data["channel"])
            if "flows" in data:
                data["flows"] = FlowConfig(**data["flows"])
            if "arena" in data:
                data["arena"] = tuple(float(v) for v in data["arena"])
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _agent_options(protocol: str) -> set:
    import inspect
    params = inspect.signature(AGENTS[protocol].__init__).parameters
    return {name for name, p in params.items() if p.kind == p.KEYWORD_ONLY} - {"buffer_size"}


@dataclass
class RunResult:
    protocol: str
    sim_time: float
    seed: object
    packets_sent: float
    packets_received: float
    paper_pdr: float
    packets_forwarded: float
    pdr: float
    throughput_Bps: float
    avg_delay_s: float
    nrl: float
    control_tx: float = 0
    buffered_at_end: float = 0
    drops: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    config: dict = field(default_factory=dict)


class Network:
    """One fully wired simulation: clock, mobility, radio, agents and CBR flows."""

    def __init__(self, cfg: ScenarioConfig, *, mobility: Optional[MobilitySource] = None,
                 flows: Optional[Sequence[CbrFlow]] = None, trace: Optional[TextIO] = None,
                 log_deliveries: bool = False):
        self.cfg = cfg.validate()
        self.sim = Simulator(trace=trace)
        self.streams = RngStreams(cfg.seed)
        self.mobility = mobility if mobility is not None else self._build_mobility()
        self.n_nodes = self.mobility.n_nodes
        self.radio = Radio(self.sim, self.mobility, cfg.channel, self.streams["loss"])
        self.metrics = MetricsAccumulator()
        cls = AGENTS[cfg.protocol]
        jitter = self.streams["protocol-jitter"]
        self.agents = [cls(i, self.sim, self.radio, self.metrics, jitter,
                           buffer_size=cfg.buffer_size, **cfg.protocol_options)
                       for i in range(self.n_nodes)]
        self.delivered: Optional[list] = [] if log_deliveries else None
        for a in self.agents:
            a.delivered_log = self.delivered
        if flows is None:
            f = cfg.flows
            flows = spawn_flows(f.n_flows, range(self.n_nodes), self.streams["traffic"],
                                rate=f.rate, packet_size=f.packet_size, start_at=f.start,
                                stop_at=f.stop if f.stop is not None else cfg.duration,
                                stagger=f.stagger)
        self.flows = list(flows)
        self._next_id = 0
        self._started = False

    def _build_mobility(self) -> MobilitySource:
        cfg, m = self.cfg, self.cfg.mobility
        if m.model == "trace":
            with open(m.trace_path, "rb") as fh:
                return load_fcd_trace(fh)
        if m.model == "static":
            return MobilitySource.static(m.positions, arena=tuple(cfg.arena))
        return generate_random_waypoint(cfg.n_nodes, tuple(cfg.arena), (m.speed_min, m.speed_max),
                                        m.pause, cfg.duration, self.streams["mobility"])

    # -- traffic ---------------------------------------------------------------------
    def new_packet(self, src: int, dst: int, size: int) -> PacketEnvelope:
        pkt = PacketEnvelope(self._next_id, src, dst, size, self.sim.now, ttl=self.cfg.ttl)
        self._next_id += 1
        return pkt

    def send(self, src: int, dst: int, size: int = 64) -> PacketEnvelope:
        pkt = self.new_packet(src, dst, size)
        self.agents[src].on_data_to_send(pkt)
        return pkt

    def _arm_flow(self, flow: CbrFlow) -> None:
        times = flow.send_times_us()
        if not times:
            return
        it = iter(times)

        def emit():
            self.send(flow.src, flow.dst, flow.packet_size)
            nxt = next(it, None)
            if nxt is not None:
                self.sim.schedule(nxt, emit, target=flow.src, kind="cbr")

        self.sim.schedule(next(it), emit, target=flow.src, kind="cbr")

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for a in self.agents:
            a.start()
        for flow in self.flows:
            self._arm_flow(flow)

    def run_until(self, t: float) -> int:
        self.start()
        return self.sim.run_until(to_us(t))

    def run(self) -> "Network":
        self.run_until(self.cfg.duration)
        return self

    # -- accounting --------------------------------------------------------------------
    def held_packet_ids(self) -> set:
        held = set(self.radio.in_flight)
        for a in self.agents:
            held |= a.held_packet_ids()
        return held

    def check_accounting(self) -> None:
        m = self.metrics
        m.check_conservation(self.held_packet_ids())
        if m.received > 0 and not math.isclose(paper_pdr(m.sent, m.received) * pdr(m.sent, m.received),
                                                100.0, rel_tol=1e-3):
            raise AccountingError("paper_pdr * pdr != 100")

    def result(self, wall_clock: float = 0.0) -> RunResult:
        m, cfg = self.metrics, self.cfg
        self.check_accounting()
        return RunResult(
            protocol=cfg.protocol, sim_time=cfg.duration, seed=cfg.seed,
            packets_sent=m.sent, packets_received=m.received,
            paper_pdr=paper_pdr(m.sent, m.received), packets_forwarded=m.forwarded,
            pdr=pdr(m.sent, m.received),
            throughput_Bps=throughput(m.data_bytes_received, cfg.duration),
            avg_delay_s=avg_e2e_delay(m.latency_samples), nrl=nrl(m.control_tx, m.received),
            control_tx=m.control_tx, buffered_at_end=m.outstanding, drops={k: v for k, v in sorted(m.drops.items()) if v},
            wall_clock_s=wall_clock, config=cfg.to_dict())


def run_scenario(cfg: ScenarioConfig, trace: Optional[TextIO] = None) -> RunResult:
    t0 = time.perf_counter()
    net = Network(cfg, trace=trace).run()
    return net.result(wall_clock=time.perf_counter() - t0)


def sweep(cfg_base: ScenarioConfig, times: Sequence[float], seeds: Sequence[int],
          protocols: Optional[Sequence[str]] = None, workers: int = 1) -> list[RunResult]:
    """Run every (protocol, time, seed) combination; results come back in that order."""
    if not times:
        raise ConfigError("times must be nonempty")
    if not seeds:
        raise ConfigError("seeds must be nonempty")
    protocols = list(protocols) if protocols else [cfg_base.protocol]
    cfgs = [replace(cfg_base, protocol=p, duration=float(t), seed=s).validate()
            for p in protocols for t in times for s in seeds]
    results: list[RunResult] = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for r in pool.map(run_scenario, cfgs):
                    results.append(r)
        else:
            for c in cfgs:
                results.append(run_scenario(c))
    except Exception as exc:
        raise SweepError(f"sweep aborted after {len(results)} of {len(cfgs)} runs: {exc}",
                         results) from exc
    return results


_AVERAGED = ("packets_sent", "packets_received", "paper_pdr", "packets_forwarded", "pdr",
             "throughput_Bps", "avg_delay_s", "nrl", "control_tx", "buffered_at_end")


def average_over_seeds(results: Sequence[RunResult]) -> list[RunResult]:
    """One row per (protocol, sim_time) with the arithmetic mean of every metric column."""
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.protocol, r.sim_time), []).append(r)
    out = []
    for (proto, t), rows in groups.items():
        means = {}
        for name in _AVERAGED:
            vals = [getattr(r, name) for r in rows]
            means[name] = INF if any(math.isinf(v) for v in vals) else math.fsum(vals) / len(vals)
        out.append(RunResult(protocol=proto, sim_time=t, seed="mean", **means))
    return out
