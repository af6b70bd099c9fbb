import io

import pytest

from manetsim.sim_core import RngStreams, SchedulingError, Simulator, rng_stream, to_s, to_us


def test_event_fires_at_its_time():
    sim = Simulator()
    seen = []
    sim.schedule(5, lambda: seen.append(sim.now))
    sim.run_until(10)
    assert seen == [5]


def test_equal_times_run_in_insertion_order():
    sim = Simulator()
    order = []
    sim.schedule(5, lambda: order.append("A"))
    sim.schedule(5, lambda: order.append("B"))
    sim.run_until(5)
    assert order == ["A", "B"]


def test_schedule_in_past_rejected():
    sim = Simulator()
    sim.run_until(2)
    with pytest.raises(SchedulingError):
        sim.schedule(1, lambda: None)


def test_cancel_semantics():
    sim = Simulator()
    ran = []
    h = sim.schedule(3, lambda: ran.append(1))
    assert Simulator.cancel(h) is True
    assert Simulator.cancel(h) is False
    sim.run_until(10)
    assert ran == []

    h2 = sim.schedule(11, lambda: ran.append(2))
    sim.run_until(20)
    assert Simulator.cancel(h2) is False
    assert ran == [2]
    assert Simulator.cancel(None) is False


def test_run_until_empty_queue():
    sim = Simulator()
    assert sim.run_until(10) == 0
    assert sim.now == 10


def test_run_until_leaves_later_events_pending():
    sim = Simulator()
    for t in (3, 7, 12):
        sim.schedule(t, lambda: None)
    assert sim.run_until(10) == 2
    assert sim.pending() == 1
    assert sim.now == 10


def test_nested_schedule_executes_in_time_order():
    sim = Simulator()
    log = []

    def first():
        log.append(("first", sim.now))
        sim.schedule(6, lambda: log.append(("inner", sim.now)))

    sim.schedule(5, first)
    sim.schedule(8, lambda: log.append(("late", sim.now)))
    sim.run_until(10)
    assert log == [("first", 5), ("inner", 6), ("late", 8)]


def test_clock_never_decreases():
    sim = Simulator()
    stamps = []
    for t in (9, 1, 4, 4, 0, 7):
        sim.schedule(t, lambda: stamps.append(sim.now))
    sim.run_until(100)
    assert stamps == sorted(stamps)


def test_run_until_before_clock_rejected():
    sim = Simulator()
    sim.run_until(5)
    with pytest.raises(SchedulingError):
        sim.run_until(4)


def test_trace_lines():
    buf = io.StringIO()
    sim = Simulator(trace=buf)
    sim.schedule(1500, lambda: None, target=3, kind="rx:Hello")
    sim.schedule(2000, lambda: None)
    sim.run_until(3000)
    assert buf.getvalue() == "1500,3,rx:Hello\n2000,scheduler,event\n"


def test_time_conversion():
    assert to_us(1.5) == 1_500_000
    assert to_s(250) == 0.00025
    with pytest.raises(ValueError):
        to_us(-1)


def test_rng_streams_reproducible_and_independent():
    s0 = rng_stream(7, "loss")
    a = [s0.random() for _ in range(3)]
    s1 = rng_stream(7, "loss")
    assert [s1.random() for _ in range(3)] == a
    assert rng_stream(7, "mobility").random() != rng_stream(7, "loss").random()
    assert rng_stream(8, "loss").random() != a[0]
    streams = RngStreams(7)
    assert streams["loss"] is streams["loss"]
    # drawing from one stream leaves the others untouched
    streams["traffic"].random()
    assert streams["loss"].random() == a[0]
