import pytest

from conftest import Sink, bfs_dist, random_connected_points, unit_disk_adj
from manetsim.mobility import MobilitySource
from manetsim.radio import CONTROL, ChannelConfig, Frame, Radio
from manetsim.sim_core import Simulator, rng_stream


def make_radio(points, **cfg):
    sim = Simulator()
    radio = Radio(sim, MobilitySource.static(points), ChannelConfig(**cfg), rng_stream(1, "loss"))
    sinks = [Sink() for _ in points]
    for i, s in enumerate(sinks):
        radio.attach(i, s)
    return sim, radio, sinks


def test_neighbors_in_and_out_of_range():
    _, radio, _ = make_radio([(0, 0), (50, 0)], range=100)
    assert radio.neighbors(0, 0) == {1} and radio.neighbors(1, 0) == {0}
    _, radio, _ = make_radio([(0, 0), (150, 0)], range=100)
    assert radio.neighbors(0, 0) == set() and radio.neighbors(1, 0) == set()


def test_range_is_a_closed_ball():
    _, radio, _ = make_radio([(0, 0), (100, 0), (100.0001, 0)], range=100)
    assert radio.neighbors(0, 0) == {1}


def test_neighbors_symmetric_on_random_layouts():
    import random
    rng = random.Random(5)
    pts = [(rng.uniform(0, 600), rng.uniform(0, 600)) for _ in range(40)]
    _, radio, _ = make_radio(pts)
    for i in range(40):
        for j in radio.neighbors(i, 0):
            assert i in radio.neighbors(j, 0)
        assert i not in radio.neighbors(i, 0)


def test_64_byte_frame_at_1mbps_takes_512_us():
    sim, radio, sinks = make_radio([(0, 0), (10, 0)], data_rate=1_000_000)
    sim.run_until(1000)
    out = radio.broadcast(Frame(0, CONTROL, 64, "hi"))
    assert [d.at for d in out] == [1512]
    sim.run_until(1511)
    assert sinks[1].frames == []
    sim.run_until(1512)
    assert len(sinks[1].frames) == 1


def test_delivery_strictly_after_send():
    _, radio, _ = make_radio([(0, 0), (1, 0)], data_rate=1e12)
    assert radio.broadcast(Frame(0, CONTROL, 1, None))[0].at > 0


def test_loss_one_and_zero():
    pts = [(0, 0), (10, 0), (0, 10), (10, 10)]
    _, radio, _ = make_radio(pts, loss_prob=1.0)
    assert radio.broadcast(Frame(0, CONTROL, 10, None)) == []
    assert radio.unicast(Frame(0, CONTROL, 10, None), 1) is None
    sim, radio, sinks = make_radio(pts, loss_prob=0.0)
    assert len(radio.broadcast(Frame(0, CONTROL, 10, None))) == 3
    sim.run_until(10_000)
    assert sinks[0].frames == []  # never hears itself
    assert all(len(s.frames) == 1 for s in sinks[1:])


def test_unicast_range_check():
    sim, radio, sinks = make_radio([(0, 0), (100, 0), (400, 0)])
    assert radio.unicast(Frame(0, CONTROL, 10, None), 1) is not None
    assert radio.unicast(Frame(0, CONTROL, 10, None), 2) is None
    sim.run_until(10_000)
    assert len(sinks[1].frames) == 1 and sinks[2].frames == []


def test_unicast_overhearers():
    sim, radio, sinks = make_radio([(0, 0), (100, 0), (0, 100), (900, 0)])
    radio.unicast(Frame(0, CONTROL, 10, None), 1, overhearers=[0, 1, 2, 3])
    sim.run_until(10_000)
    assert len(sinks[2].overheard) == 1
    assert sinks[3].overheard == [] and sinks[1].overheard == [] and sinks[0].overheard == []


def test_mid_trace_node_is_silent_before_first_sample():
    from manetsim.mobility import Position, Waypoint
    src = MobilitySource([[Waypoint(0, Position(0, 0))], [Waypoint(5, Position(10, 0))]])
    sim = Simulator()
    radio = Radio(sim, src, ChannelConfig(), rng_stream(1, "loss"))
    assert radio.neighbors(1, 1_000_000) == set()
    assert radio.neighbors(0, 1_000_000) == set()
    assert radio.neighbors(0, 6_000_000) == {1}


def test_invalid_channel_config():
    for bad in (dict(range=0), dict(data_rate=-1), dict(loss_prob=1.5)):
        with pytest.raises(ValueError):
            ChannelConfig(**bad)
    with pytest.raises(ValueError):
        Frame(0, CONTROL, 0, None)


@pytest.mark.parametrize("seed", range(5))
def test_flooding_reaches_connected_component(seed):
    import random
    rng = random.Random(seed)
    pts = [(rng.uniform(0, 800), rng.uniform(0, 800)) for _ in range(25)]
    sim, radio, _ = make_radio(pts)
    reached = {0}

    class Flooder(Sink):
        def __init__(self, node):
            super().__init__()
            self.node = node

        def on_frame_received(self, frame):
            if self.node not in reached:
                reached.add(self.node)
                radio.broadcast(Frame(self.node, CONTROL, 10, None))

    for i in range(len(pts)):
        radio.attach(i, Flooder(i))
    radio.broadcast(Frame(0, CONTROL, 10, None))
    sim.run_until(10_000_000)
    assert reached == set(bfs_dist(unit_disk_adj(pts, 250), 0))


def test_random_connected_helper():
    import random
    pts = random_connected_points(random.Random(1), 10, 500, 250)
    assert len(bfs_dist(unit_disk_adj(pts, 250), 0)) == 10
