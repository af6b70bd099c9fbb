"""Shared helpers: static topologies and a plain BFS oracle."""

import random
from collections import deque

import pytest


def bfs_dist(adj: dict, src: int) -> dict:
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def unit_disk_adj(points, rng_m: float) -> dict:
    adj = {i: set() for i in range(len(points))}
    for i, (xi, yi) in enumerate(points):
        for j, (xj, yj) in enumerate(points):
            if i != j and (xi - xj) ** 2 + (yi - yj) ** 2 <= rng_m ** 2:
                adj[i].add(j)
    return adj


def random_connected_points(rng: random.Random, n: int, side: float, rng_m: float):
    """Rejection-sample a connected unit-disk placement."""
    while True:
        pts = [(rng.uniform(0, side), rng.uniform(0, side)) for _ in range(n)]
        if len(bfs_dist(unit_disk_adj(pts, rng_m), 0)) == n:
            return pts


class Sink:
    def __init__(self):
        self.frames = []
        self.overheard = []

    def on_frame_received(self, frame):
        self.frames.append(frame)

    def on_overhear(self, frame):
        self.overheard.append(frame)


@pytest.fixture
def chain3():
    """A - B - C on a line, 200 m apart, range 250: A and C are not neighbours."""
    return [(0.0, 0.0), (200.0, 0.0), (400.0, 0.0)]


def static_network(protocol, points, *, loss=0.0, seed=1, buffer_size=64, **options):
    """Wired Network on fixed positions with no CBR flows; drive it with ``net.send``."""
    from manetsim.radio import ChannelConfig
    from manetsim.scenario import FlowConfig, MobilityConfig, Network, ScenarioConfig

    cfg = ScenarioConfig(protocol=protocol, seed=seed, duration=1000.0,
                         mobility=MobilityConfig(model="static", positions=[list(p) for p in points]),
                         channel=ChannelConfig(loss_prob=loss), flows=FlowConfig(n_flows=0),
                         buffer_size=buffer_size, protocol_options=options)
    net = Network(cfg, flows=[], log_deliveries=True)
    net.start()
    return net


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def verdict(request):
    """Record one ``criterion N: PASS|FAIL ...`` line; all lines are echoed at the end of the run."""
    def record(n, ok, detail, extra=()):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append((n, line, list(extra)))
        print(line, *extra, sep="\n")
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line, extra in sorted(lines, key=lambda item: item[0]):
            terminalreporter.write_line(line)
            for e in extra:
                terminalreporter.write_line(e)
