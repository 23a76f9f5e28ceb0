import random

import pytest

from strategic_rrm.netsim.engine import US, DropReason, PacketKind, Simulator, min_delay_us
from strategic_rrm.netsim.routing import MutationMode, install_initial_routes
from strategic_rrm.netsim.topology import Role, Topology

from conftest import line_topology


def make_sim(topo, pairs, update_us=5000, **kw):
    return Simulator(topo, install_initial_routes(topo, pairs), update_us, **kw)


def test_single_packet_delay_closed_form(line):
    sim = make_sim(line, [("h1", "h2")])
    pkt = sim.send_packet("h1", "h2", 1000)
    sim.run(1)
    # two hops of 1000 B at 10 Mb/s (800 us) plus 100 us propagation each
    assert pkt.delivered - pkt.created == 1800 == min_delay_us(sim, pkt)


@pytest.mark.parametrize("cap,prop,size,n", [(1e6, 7, 125, 3), (3e6, 250, 1500, 2), (100e6, 1, 64, 4)])
def test_delay_closed_form_other_links(cap, prop, size, n):
    topo = line_topology(cap, prop, n_switches=n)
    sim = make_sim(topo, [("h1", "h2")])
    pkt = sim.send_packet("h1", "h2", size)
    sim.run(1)
    per_hop = int(size * 8 * US // cap) + prop
    assert pkt.delivered - pkt.created == per_hop * (n + 1)


def test_flow_packet_count(line):
    sim = make_sim(line, [("h1", "h2")])
    flow = sim.inject_flow("h1", "h2", 100, 100, 0, 10)
    sim.run(11)
    assert flow.created == 1000 == sim.injected == sim.delivered
    with pytest.raises(ValueError):
        sim.inject_flow("h1", "h2", 0, 100, 0, 1)
    with pytest.raises(ValueError):
        sim.inject_flow("h1", "h2", 10, 100, 5, 5)


def test_jittered_flow_keeps_count_and_slots(line):
    sim = make_sim(line, [("h1", "h2")])
    sim.inject_flow("h1", "h2", 100, 100, 0, 10, jitter_rng=random.Random(1))
    sim.run(11)
    times = [p.created for p in sim.packets]
    assert len(times) == 1000
    assert all(k * 10_000 <= t < (k + 1) * 10_000 for k, t in enumerate(times))


def test_no_drops_below_capacity(line):
    sim = make_sim(line, [("h1", "h2")])
    sim.inject_flow("h1", "h2", 500, 1000, 0, 5)  # 4 Mb/s on 10 Mb/s links
    sim.run(6)
    assert sim.dropped == 0 and sim.delivered == 2500


def test_overload_drops_half():
    # two senders at 10 Mb/s each into one 10 Mb/s link
    topo = Topology()
    topo.add_node("s", Role.SWITCH)
    for h, role in (("a", Role.CLIENT), ("b", Role.CLIENT), ("t", Role.TARGET), ("d", Role.DECOY)):
        topo.add_node(h, role, "s")
        topo.add_link(h, "s", 10e6, 100, 100)
    sim = make_sim(topo.validate(), [("a", "t"), ("b", "t")])
    for h in ("a", "b"):
        sim.inject_flow(h, "t", 1250, 1000, 0, 20, jitter_rng=random.Random(h))
    sim.run(21)
    late = [p for p in sim.packets if p.created >= 5 * US]
    frac = sum(p.drop is not None for p in late) / len(late)
    assert frac == pytest.approx(0.5, abs=0.05)
    assert all(p.drop in (None, DropReason.QUEUE_OVERFLOW) for p in sim.packets)


def test_update_window_holds_and_drops():
    topo = line_topology(queue=10, n_switches=2)
    sim = make_sim(topo, [("h1", "h2")], update_us=100_000)
    sim.routing.busy_until["s2"] = 100_000
    sim.sync_busy()
    sim.inject_flow("h1", "h2", 1000, 100, 0, 0.2)
    sim.run(1)
    reasons = {p.drop for p in sim.packets}
    assert DropReason.UPDATE_WINDOW_OVERFLOW in reasons
    first = sim.packets[0]
    assert first.delivered > 100_000  # held at s2 until the update finished
    assert sim.conservation_holds()


def test_conservation_at_every_event(line):
    sim = make_sim(line, [("h1", "h2")])
    seen = []
    sim.event_hook = lambda s: seen.append(s.conservation_holds())
    sim.inject_flow("h1", "h2", 2000, 1000, 0, 2)
    sim.run(3)
    assert seen and all(seen)


def test_trace_csv_and_kinds(line):
    sim = make_sim(line, [("h1", "h2")])
    assert sim.traceroute("h1", "h2") == ["L000", "L001"]
    sim.send_packet("h1", "h2", 100, PacketKind.PING)
    trace = sim.run(1)
    text = trace.to_csv()
    lines = text.splitlines()
    assert lines[0] == "packet_id,src,dst,kind,created_us,delivered_us,drop_reason"
    assert lines[1].startswith("0,h1,h2,traceroute,0,")
    assert PacketKind.PING.signal.value == "N" and PacketKind.REGULAR.signal.value == "G"


def test_mutation_log_and_observers():
    from strategic_rrm.netsim.topology import paper_like
    topo = paper_like()
    pairs = [(c, "target") for c in topo.by_role(Role.CLIENT)]
    sim = make_sim(topo, pairs, update_us=1000)
    seen = []
    sim.packet_observers.append(lambda p, now: seen.append((p.src, now)))
    sim.schedule(10_000, lambda s: s.mutate(random.Random(1), MutationMode.ANY_SIZE))
    sim.send_packet("client0", "target", 100)
    sim.run(1)
    assert seen == [("client0", 0)]
    assert sim.mutation_log and sim.mutation_log[0][0] == 10_000
    with pytest.raises(ValueError):
        sim.schedule(0, lambda s: None)
