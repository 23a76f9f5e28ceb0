"""Candidate path generation, installed routes and random route mutation."""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .topology import Role, Topology


class RoutingError(ValueError):
    pass


class MutationMode(Enum):
    OPTIMAL_SIZE_ONLY = "optimal"
    ANY_SIZE = "any"


@dataclass(frozen=True)
class Route:
    nodes: tuple[str, ...]
    links: tuple[str, ...]

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.links)

    def flow_entries(self) -> dict[str, tuple[str, str]]:
        """switch -> (in link, out link) for every transit node."""
        return {self.nodes[i]: (self.links[i - 1], self.links[i]) for i in range(1, len(self.nodes) - 1)}

    def __str__(self):
        return "-".join(self.nodes)


def k_shortest_paths(topo: Topology, src: str, dst: str, k: int) -> list[Route]:
    """Up to ``k`` loop-free paths ordered by (hop count, link-id sequence).

    A* over partial paths keyed by (hops so far + BFS distance left, link ids):
    every prefix sorts before its extensions, so complete paths pop in
    exactly the required order. Hosts are never transit nodes.
    """
    if k < 1:
        raise RoutingError("k must be >= 1")
    if src == dst:
        raise RoutingError("src and dst must differ")
    for n in (src, dst):
        if n not in topo.nodes:
            raise RoutingError(f"unknown node {n!r}")
    # BFS distance to dst is a consistent heuristic: a prefix never sorts after its extensions
    dist = {dst: 0}
    todo = deque([dst])
    while todo:
        u = todo.popleft()
        for nb, _ in topo.adj[u]:
            if nb not in dist:
                dist[nb] = dist[u] + 1
                todo.append(nb)
    if src not in dist:
        raise RoutingError(f"{dst} is unreachable from {src}")
    out: list[Route] = []
    heap = [(dist[src], (), (src,))]
    while heap and len(out) < k:
        _, links, nodes = heapq.heappop(heap)
        last = nodes[-1]
        if last == dst:
            out.append(Route(nodes, links))
            continue
        if last != src and topo.nodes[last].role.is_host:
            continue
        g = len(links) + 1
        for nb, lid in topo.adj[last]:
            if nb in nodes:
                continue
            heapq.heappush(heap, (g + dist[nb], links + (lid,), nodes + (nb,)))
    if not out:
        raise RoutingError(f"{dst} is unreachable from {src}")
    return out


@dataclass
class RoutingState:
    """Installed route per (src, dst) pair plus the candidates it may mutate to."""

    candidates: dict[tuple[str, str], list[Route]] = field(default_factory=dict)
    installed: dict[tuple[str, str], Route] = field(default_factory=dict)
    busy_until: dict[str, int] = field(default_factory=dict)  # switch -> sim µs
    k: int = 4

    def route(self, src: str, dst: str) -> Route:
        try:
            return self.installed[(src, dst)]
        except KeyError:
            raise RoutingError(f"no route installed for {src}->{dst}") from None

    def add_pair(self, topo: Topology, src: str, dst: str) -> Route:
        if (src, dst) not in self.installed:
            cands = k_shortest_paths(topo, src, dst, self.k)
            self.candidates[(src, dst)] = cands
            self.installed[(src, dst)] = cands[0]
        return self.installed[(src, dst)]


def install_initial_routes(topo: Topology, pairs: Iterable[tuple[str, str]], k: int = 4) -> RoutingState:
    state = RoutingState(k=k)
    for src, dst in pairs:
        state.add_pair(topo, src, dst)
    for s in topo.switches:
        state.busy_until[s] = 0
    return state


def changed_switches(old: Route, new: Route, topo: Topology) -> set[str]:
    if old == new:
        return set()
    a, b = old.flow_entries(), new.flow_entries()
    return {s for s in a.keys() | b.keys()
            if a.get(s) != b.get(s) and topo.nodes[s].role is Role.SWITCH}


def mutate_routes(state: RoutingState, topo: Topology, rng, mode: MutationMode = MutationMode.ANY_SIZE,
                  k: int | None = None, now: int = 0, update_duration_us: int = 0) -> set[str]:
    """Redraw every installed route uniformly from its candidate set.

    Pairs are visited in sorted order so a seeded ``rng`` (anything with
    ``randrange``) gives a reproducible draw. Returns the switches whose flow
    entries changed; each becomes busy until ``now + update_duration_us``.
    """
    k = k or state.k
    if k < 2:
        raise RoutingError("mutation needs k >= 2")
    affected: set[str] = set()
    for pair in sorted(state.installed):
        cands = state.candidates[pair][:k]
        if mode is MutationMode.OPTIMAL_SIZE_ONLY:
            best = cands[0].hops
            cands = [r for r in cands if r.hops == best]
        if len(cands) < 2:
            continue
        new = cands[rng.randrange(len(cands))]
        old = state.installed[pair]
        if new != old:
            affected |= changed_switches(old, new, topo)
            state.installed[pair] = new
    until = now + update_duration_us
    for s in affected:
        if state.busy_until.get(s, 0) < until:
            state.busy_until[s] = until
    return affected


def traceroute(state: RoutingState, src: str, dst: str) -> list[str]:
    return list(state.route(src, dst).links)
