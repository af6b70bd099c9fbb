import math

from conftest import bfs_dist, static_network, unit_disk_adj
from manetsim.routing.dsdv import (FULL, INCREMENTAL, DsdvEntry, DsdvUpdate, next_hop_cycles,
                                   update_size)


def lone(points=((0, 0), (100, 0), (200, 0), (300, 0))):
    net = static_network("dsdv", points)
    return net, net.agents[0]


def test_fresh_node_dump_is_self_only():
    net, a = lone()
    upd = a.periodic_update()
    assert upd.kind == FULL and upd.entries == ((0, 0, 2),)
    assert net.metrics.control_tx == 1
    assert net.metrics.control_bytes == update_size(1) == 24


def test_dump_lists_known_destinations_plus_self():
    net, a = lone()
    a.merge_update(DsdvUpdate(FULL, ((1, 0, 2), (2, 1, 4), (3, 2, 6)), 1), 1)
    upd = a.periodic_update()
    assert [e[0] for e in upd.entries] == [0, 1, 2, 3]


def test_two_periodic_updates_add_four():
    _, a = lone()
    start = a.seq_no
    a.periodic_update()
    a.periodic_update()
    assert a.seq_no == start + 4 and a.seq_no % 2 == 0


def test_newer_sequence_wins():
    _, a = lone()
    a.table[3] = DsdvEntry(3, 2, 3, 10, 0)
    assert a.merge_update(DsdvUpdate(FULL, ((3, 4, 12),), 1), 1) == [3]
    e = a.table[3]
    assert (e.next_hop, e.hops, e.seq_no) == (1, 5, 12)


def test_equal_sequence_shorter_path_wins():
    _, a = lone()
    a.table[3] = DsdvEntry(3, 2, 3, 10, 0)
    assert a.merge_update(DsdvUpdate(FULL, ((3, 1, 10),), 1), 1) == [3]
    assert a.table[3].hops == 2
    # equal length is not an improvement
    assert a.merge_update(DsdvUpdate(FULL, ((3, 1, 10),), 2), 2) == []


def test_stale_sequence_rejected():
    _, a = lone()
    a.table[3] = DsdvEntry(3, 2, 3, 12, 0)
    assert a.merge_update(DsdvUpdate(FULL, ((3, 0, 10),), 1), 1) == []
    assert a.table[3].seq_no == 12


def test_self_advert_with_higher_seq_ignored():
    _, a = lone()
    a.merge_update(DsdvUpdate(FULL, ((0, 3, 99),), 1), 1)
    assert a.table[0].seq_no == 0 and a.table[0].hops == 0
    assert a.ignored_self_adverts == 1


def test_link_break_marks_odd_and_broadcasts_now():
    net, a = lone()
    a.table[3] = DsdvEntry(3, 1, 3, 12, 0)
    a.table[2] = DsdvEntry(2, 2, 1, 8, 0)
    before = net.metrics.control_tx
    assert a.handle_link_break(1) == [3]
    e = a.table[3]
    assert e.seq_no == 13 and math.isinf(e.hops) and not e.valid
    assert a.table[2].seq_no == 8 and a.table[2].valid
    assert net.metrics.control_tx == before + 1
    # genuine even advert overrides the broken entry
    a.merge_update(DsdvUpdate(INCREMENTAL, ((3, 1, 14),), 2), 2)
    assert a.table[3].valid and a.table[3].seq_no == 14 and a.table[3].next_hop == 2


def test_incremental_waits_for_settling_time():
    net, a = lone([(0, 0), (5000, 0)])
    net.run_until(2)  # first periodic dumps done, nobody in range
    before = net.metrics.control_tx
    a.merge_update(DsdvUpdate(FULL, ((9, 0, 2),), 1), 1)
    assert a.table[9].changed
    assert a._incremental.fire_at == net.sim.now + 5_000_000
    net.run_until(6.999)
    assert net.metrics.control_tx == before
    net.run_until(7)
    assert net.metrics.control_tx == before + 1
    assert not a.table[9].changed


def test_buffered_packet_times_out_after_five_seconds():
    net = static_network("dsdv", [(0, 0), (5000, 0)])
    net.send(0, 1)
    net.run_until(4.9)
    assert net.metrics.dropped == 0
    net.run_until(5.1)
    assert net.metrics.drops == {"no-route": 1}


def test_converges_to_bfs_on_a_line():
    pts = [(i * 200.0, 0.0) for i in range(6)]
    net = static_network("dsdv", pts)
    net.run_until(15 * 6 + 1)
    adj = unit_disk_adj(pts, 250)
    for agent in net.agents:
        want = bfs_dist(adj, agent.node)
        got = {d: e.hops for d, e in agent.table.items()}
        assert got == want
    assert next_hop_cycles(net.agents) == []


def test_cycle_search_finds_planted_loop():
    net = static_network("dsdv", [(0, 0), (100, 0), (200, 0)])
    a, b, c = net.agents
    a.table[2] = DsdvEntry(2, 1, 2, 6, 0)
    b.table[2] = DsdvEntry(2, 0, 2, 6, 0)
    assert next_hop_cycles(net.agents) == [(2, (0, 1))]
    b.table[2].seq_no = 8  # different sequence numbers do not form a same-seq loop
    assert next_hop_cycles(net.agents) == []


def test_newer_but_longer_advert_waits_while_next_hop_is_alive():
    net, a = lone()
    a.merge_update(DsdvUpdate(FULL, ((2, 0, 10),), 2), 2)  # direct route, next hop 2 heard now
    assert a.table[2].hops == 1
    assert a.merge_update(DsdvUpdate(FULL, ((2, 3, 12),), 1), 1) == []
    assert a.deferred_adverts == 1
    # the next hop catches up with the same sequence number
    assert a.merge_update(DsdvUpdate(FULL, ((2, 0, 12),), 2), 2) == [2]
    assert (a.table[2].hops, a.table[2].seq_no) == (1, 12)
    # once the next hop has been silent for a full period the longer route is taken
    net.run_until(18)
    a.last_heard[2] = 0
    assert a.merge_update(DsdvUpdate(FULL, ((2, 3, 14),), 1), 1) == [2]
