"""Packet-level discrete-event simulator.

Time is integer microseconds. Events are ordered by (time, insertion
sequence). Every directed link has a drop-tail FIFO of ``queue_pkts``
waiting packets and a single transmitter; a packet's transmission starts at
``max(arrival, link free, switch busy-until)``, so a switch installing new
flow entries holds arriving packets in its output queues until the update
finishes. Packets follow the route installed for their (src, dst) pair at
creation time. A packet that enters its final link is settled at once: its
``delivered`` time is the arrival time already fixed by that link.
"""
from __future__ import annotations

import csv
import heapq
import io
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from ..game import SenderAction
from .routing import MutationMode, Route, RoutingState, mutate_routes
from .topology import Role, Topology

US = 1_000_000


class PacketKind(Enum):
    REGULAR = "regular"
    TRACEROUTE = "traceroute"
    PING = "ping"

    @property
    def signal(self) -> SenderAction:
        return SenderAction.REGULAR if self is PacketKind.REGULAR else SenderAction.RECON


class DropReason(Enum):
    QUEUE_OVERFLOW = "queue_overflow"
    UPDATE_WINDOW_OVERFLOW = "update_window_overflow"


class Packet:
    __slots__ = ("id", "src", "dst", "size", "kind", "created", "delivered", "drop", "path", "hop", "hops", "route", "txs",
                 "last")

    def __init__(self, pid, src, dst, size, kind, created, path, txs, route):
        self.id = pid
        self.src = src
        self.dst = dst
        self.size = size
        self.kind = kind
        self.created = created
        self.delivered = -1
        self.drop: Optional[DropReason] = None
        self.path = path  # compiled directed-link indices
        self.last = len(path)
        self.txs = txs  # per-hop transmission time, µs
        self.route = route
        self.hop = 0
        self.hops: Optional[list[int]] = None

    @property
    def delay(self) -> int:
        return self.delivered - self.created if self.delivered >= 0 else -1


@dataclass
class Flow:
    src: str
    dst: str
    interval_us: int
    size: int
    start: int
    end: int
    kind: PacketKind = PacketKind.REGULAR
    created: int = 0
    stopped: bool = False
    jitter: Optional[Callable[[int], int]] = None  # interval -> offset in [0, interval)
    nominal: int = 0

    @property
    def expected_packets(self) -> int:
        return -(-(self.end - self.start) // self.interval_us)

    def stop(self):
        self.stopped = True


_ARRIVE, _FLOW, _CALL = 0, 1, 2


class Simulator:
    def __init__(self, topo: Topology, routing: RoutingState, update_duration_us: int = 5_000,
                 record_hops: bool = False):
        self.topo = topo
        self.routing = routing
        self.update_duration_us = int(update_duration_us)
        self.record_hops = record_hops
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self.packets: list[Packet] = []
        self.injected = self.delivered = self.dropped = 0
        self.pending_arrivals = 0
        self.events_processed = 0
        self.packet_observers: list[Callable[[Packet, int], None]] = []
        self.event_hook: Optional[Callable[["Simulator"], None]] = None
        self.mutation_log: list[tuple[int, int]] = []  # (time, affected switches)

        self._dl_index: dict[tuple[str, str], int] = {}
        self.dl_link: list[str] = []
        self.dl_to: list[str] = []
        self.dl_from_switch: list[Optional[str]] = []
        self.dl_from_idx: list[int] = []  # index into self._busy, -1 for host uplinks
        self._switch_idx = {s: i for i, s in enumerate(topo.switches)}
        self._busy = [routing.busy_until.get(s, 0) for s in topo.switches]
        self.dl_cap: list[float] = []
        self.dl_prop: list[int] = []
        self.dl_qcap: list[int] = []
        self.dl_free: list[int] = []
        self.dl_queue: list[deque] = []
        self.dl_held: list[int] = []
        for link in topo.links.values():
            for a, b in ((link.a, link.b), (link.b, link.a)):
                self._dl_index[(link.id, a)] = len(self.dl_link)
                self.dl_link.append(link.id)
                self.dl_to.append(b)
                self.dl_from_switch.append(a if topo.nodes[a].role is Role.SWITCH else None)
                self.dl_from_idx.append(self._switch_idx.get(a, -1))
                self.dl_cap.append(link.capacity_bps)
                self.dl_prop.append(link.prop_delay_us)
                self.dl_qcap.append(link.queue_pkts)
                self.dl_free.append(0)
                self.dl_queue.append(deque())
                self.dl_held.append(0)
        self._compiled: dict[Route, tuple[int, ...]] = {}
        self._compiled_tx: dict[tuple[Route, int], tuple[int, ...]] = {}
        self._pair_cache: dict[tuple[str, str, int], tuple[Route, tuple[int, ...], tuple[int, ...]]] = {}

    # ------------------------------------------------------------ scheduling

    def _push(self, t: int, kind: int, obj) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, kind, obj))

    def schedule(self, t_us: int, fn: Callable[["Simulator"], None]) -> None:
        if t_us < self.now:
            raise ValueError(f"cannot schedule in the past ({t_us} < {self.now})")
        self._push(int(t_us), _CALL, fn)

    def compile_route(self, route: Route) -> tuple[int, ...]:
        c = self._compiled.get(route)
        if c is None:
            c = tuple(self._dl_index[(lid, route.nodes[i])] for i, lid in enumerate(route.links))
            self._compiled[route] = c
        return c

    def tx_time(self, dl: int, size: int) -> int:
        return int(size * 8 * US // self.dl_cap[dl])

    def _route_tx(self, route: Route, size: int) -> tuple[int, ...]:
        key = (route, size)
        c = self._compiled_tx.get(key)
        if c is None:
            c = self._compiled_tx[key] = tuple(self.tx_time(dl, size) for dl in self.compile_route(route))
        return c

    # ------------------------------------------------------------ traffic

    def inject_flow(self, src: str, dst: str, rate: float, pkt_size: int, start: float, end: float,
                    kind: PacketKind = PacketKind.REGULAR, jitter_rng=None) -> Flow:
        """Packets every floor(1e6 / rate) µs over [start, end) seconds.

        With ``jitter_rng`` each packet leaves at its nominal slot plus a
        uniform offset inside the slot, so the count and mean rate are
        unchanged but flows do not phase-lock at a full drop-tail queue.
        """
        if rate <= 0:
            raise ValueError("rate must be positive")
        if pkt_size <= 0:
            raise ValueError("packet size must be positive")
        s_us, e_us = int(round(start * US)), int(round(end * US))
        if s_us >= e_us:
            raise ValueError(f"empty flow window [{start}, {end})")
        interval = int(US // rate)
        if interval < 1:
            raise ValueError("rate too high for microsecond resolution")
        first = max(s_us, self.now)
        flow = Flow(src, dst, interval, int(pkt_size), s_us, e_us, kind, nominal=first)
        if jitter_rng is not None:
            rnd = jitter_rng.random
            flow.jitter = lambda n: int(rnd() * n)
        self.routing.add_pair(self.topo, src, dst)
        self._push(first + (flow.jitter(min(interval, e_us - first)) if flow.jitter else 0), _FLOW, flow)
        return flow

    def send_packet(self, src: str, dst: str, size: int, kind: PacketKind = PacketKind.REGULAR) -> Packet:
        route = self.routing.route(src, dst)
        key = (src, dst, size)
        cached = self._pair_cache.get(key)
        if cached is None or cached[0] is not route:
            cached = self._pair_cache[key] = (route, self.compile_route(route), self._route_tx(route, size))
        pkt = Packet(len(self.packets), src, dst, size, kind, self.now, cached[1], cached[2], route)
        if self.record_hops:
            pkt.hops = [self.now]
        self.packets.append(pkt)
        self.injected += 1
        for obs in self.packet_observers:
            obs(pkt, self.now)
        self._enqueue(pkt, self.now)
        return pkt

    def traceroute(self, src: str, dst: str, size: int = 64) -> list[str]:
        """One probe packet along the current route; returns that route's link ids."""
        route = self.routing.route(src, dst)
        self.send_packet(src, dst, size, PacketKind.TRACEROUTE)
        return list(route.links)

    def mutate(self, rng, mode: MutationMode = MutationMode.ANY_SIZE, k: Optional[int] = None) -> set[str]:
        affected = mutate_routes(self.routing, self.topo, rng, mode, k, self.now, self.update_duration_us)
        self.mutation_log.append((self.now, len(affected)))
        self.sync_busy()
        return affected

    def sync_busy(self) -> None:
        """Copy switch busy-until times from the routing state into the hot-path array."""
        bu = self.routing.busy_until
        for s, i in self._switch_idx.items():
            self._busy[i] = bu.get(s, 0)

    # ------------------------------------------------------------ per-hop

    def _enqueue(self, pkt: Packet, t: int) -> None:
        hop = pkt.hop
        dl = pkt.path[hop]
        q = self.dl_queue[dl]
        while q and q[0][0] <= t:
            if q.popleft()[1]:
                self.dl_held[dl] -= 1
        si = self.dl_from_idx[dl]
        busy = self._busy[si] if si >= 0 else 0
        held = busy > t
        if len(q) >= self.dl_qcap[dl]:
            pkt.drop = (DropReason.UPDATE_WINDOW_OVERFLOW if held or self.dl_held[dl]
                        else DropReason.QUEUE_OVERFLOW)
            self.dropped += 1
            return
        start = self.dl_free[dl]
        if start < t:
            start = t
        if busy > start:
            start = busy
        done = start + pkt.txs[hop]
        self.dl_free[dl] = done
        if start > t:
            q.append((start, held))
            if held:
                self.dl_held[dl] += 1
        arrive = done + self.dl_prop[dl]
        if hop + 1 == pkt.last:
            # nothing downstream can delay the final hop, so settle delivery now
            pkt.hop = hop + 1
            pkt.delivered = arrive
            if pkt.hops is not None:
                pkt.hops.append(arrive)
            self.delivered += 1
            return
        self.pending_arrivals += 1
        self._seq += 1
        heapq.heappush(self._heap, (arrive, self._seq, _ARRIVE, pkt))

    # ------------------------------------------------------------ main loop

    def run(self, until: float) -> "SimulationTrace":
        """Process every event with time <= ``until`` seconds."""
        limit = int(round(until * US))
        heap = self._heap
        pop = heapq.heappop
        hook = self.event_hook
        enqueue = self._enqueue
        processed = 0
        while heap and heap[0][0] <= limit:
            t, _, kind, obj = pop(heap)
            processed += 1
            if kind == _ARRIVE:
                self.pending_arrivals -= 1
                obj.hop += 1
                if obj.hops is not None:
                    obj.hops.append(t)
                enqueue(obj, t)
                if hook is not None:
                    self.now = t
                    self.events_processed += processed
                    processed = 0
                    hook(self)
                continue
            self.now = t
            if kind == _FLOW:
                if not obj.stopped and t < obj.end:
                    obj.created += 1
                    self.send_packet(obj.src, obj.dst, obj.size, obj.kind)
                    nxt = obj.nominal = obj.nominal + obj.interval_us
                    end = obj.end
                    if nxt < end:
                        if obj.jitter is not None:
                            span = end - nxt
                            nxt += obj.jitter(obj.interval_us if obj.interval_us < span else span)
                        self._seq += 1
                        heapq.heappush(heap, (nxt, self._seq, _FLOW, obj))
            else:
                self.events_processed += processed
                processed = 0
                obj(self)
            if hook is not None:
                self.events_processed += processed
                processed = 0
                hook(self)
        self.events_processed += processed
        self.now = max(self.now, limit)
        return SimulationTrace(self.packets, self.now)

    @property
    def in_flight(self) -> int:
        return self.pending_arrivals

    def conservation_holds(self) -> bool:
        return self.injected == self.delivered + self.dropped + self.pending_arrivals


@dataclass
class SimulationTrace:
    packets: list[Packet]
    end_time: int

    def rows(self):
        for p in self.packets:
            yield (p.id, p.src, p.dst, p.kind.value, p.created, p.delivered,
                   p.drop.value if p.drop else "")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["packet_id", "src", "dst", "kind", "created_us", "delivered_us", "drop_reason"])
        w.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def min_delay_us(sim: Simulator, pkt: Packet) -> int:
    """Transmission plus propagation along the packet's route with empty queues."""
    return sum(pkt.txs) + sum(sim.dl_prop[dl] for dl in pkt.path)
