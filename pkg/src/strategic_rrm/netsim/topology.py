"""Network topologies: nodes with roles, capacitated links, file I/O and the builtin generator."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class TopologyError(ValueError):
    pass


class Role(Enum):
    SWITCH = "switch"
    CLIENT = "client"
    BOT = "bot"
    DECOY = "decoy"
    TARGET = "target"

    @property
    def is_host(self) -> bool:
        return self is not Role.SWITCH


@dataclass(frozen=True)
class Node:
    id: str
    role: Role
    attach: Optional[str] = None  # switch a host hangs off


@dataclass(frozen=True)
class Link:
    id: str
    a: str
    b: str
    capacity_bps: float
    prop_delay_us: int
    queue_pkts: int

    def other(self, n: str) -> str:
        return self.b if n == self.a else self.a


@dataclass
class Topology:
    nodes: dict[str, Node] = field(default_factory=dict)
    links: dict[str, Link] = field(default_factory=dict)
    adj: dict[str, list[tuple[str, str]]] = field(default_factory=dict)  # node -> [(neighbor, link id)]

    def add_node(self, nid: str, role: Role, attach: Optional[str] = None) -> None:
        if nid in self.nodes:
            raise TopologyError(f"duplicate node {nid!r}")
        self.nodes[nid] = Node(nid, role, attach)
        self.adj[nid] = []

    def add_link(self, a: str, b: str, capacity_bps: float, prop_delay_us: int, queue_pkts: int,
                 lid: Optional[str] = None) -> Link:
        lid = lid or f"L{len(self.links):03d}"
        for n in (a, b):
            if n not in self.nodes:
                raise TopologyError(f"link {lid} references unknown node {n!r}")
        if a == b:
            raise TopologyError(f"link {lid} is a self-loop on {a!r}")
        if lid in self.links:
            raise TopologyError(f"duplicate link id {lid!r}")
        link = Link(lid, a, b, float(capacity_bps), int(prop_delay_us), int(queue_pkts))
        self.links[lid] = link
        self.adj[a].append((b, lid))
        self.adj[b].append((a, lid))
        return link

    def by_role(self, role: Role) -> list[str]:
        return [n.id for n in self.nodes.values() if n.role is role]

    @property
    def switches(self) -> list[str]:
        return self.by_role(Role.SWITCH)

    @property
    def target(self) -> str:
        return self.by_role(Role.TARGET)[0]

    @property
    def decoys(self) -> list[str]:
        return self.by_role(Role.DECOY)

    def link_between(self, a: str, b: str) -> str:
        for nb, lid in self.adj[a]:
            if nb == b:
                return lid
        raise KeyError(f"no link between {a} and {b}")

    def validate(self) -> "Topology":
        if not self.nodes:
            raise TopologyError("empty topology")
        targets = self.by_role(Role.TARGET)
        if len(targets) != 1:
            raise TopologyError(f"need exactly one target server, found {len(targets)}")
        if not self.decoys:
            raise TopologyError("need at least one decoy server")
        for link in self.links.values():
            if link.capacity_bps <= 0 or link.prop_delay_us <= 0 or link.queue_pkts <= 0:
                raise TopologyError(f"link {link.id}: capacity, delay and queue must be positive")
        for node in self.nodes.values():
            if not node.role.is_host:
                continue
            nbrs = self.adj[node.id]
            if len(nbrs) != 1 or self.nodes[nbrs[0][0]].role is not Role.SWITCH:
                raise TopologyError(f"host {node.id} must attach to exactly one switch")
            if node.attach is not None and nbrs[0][0] != node.attach:
                raise TopologyError(f"host {node.id} declared on {node.attach} but wired to {nbrs[0][0]}")
        start = next(iter(self.nodes))
        seen = {start}
        todo = deque([start])
        while todo:
            for nb, _ in self.adj[todo.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        if len(seen) != len(self.nodes):
            missing = sorted(set(self.nodes) - seen)
            raise TopologyError(f"topology is disconnected; unreachable: {missing[:5]}")
        return self


# ------------------------------------------------------------------ file format
#
#   [nodes]
#   s1 switch
#   h1 client s1
#   [links]
#   h1 s1 10000000 100 100
#
# Links get ids L000, L001, ... in file order.

def parse_topology(text: str) -> Topology:
    topo = Topology()
    section = None
    pending_links = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("nodes", "links"):
                raise TopologyError(f"line {lineno}: unknown section [{section}]")
            continue
        parts = line.split()
        if section == "nodes":
            if len(parts) not in (2, 3):
                raise TopologyError(f"line {lineno}: expected 'id role [attach_switch]'")
            try:
                role = Role(parts[1].lower())
            except ValueError:
                raise TopologyError(f"line {lineno}: unknown role {parts[1]!r}") from None
            topo.add_node(parts[0], role, parts[2] if len(parts) == 3 else None)
        elif section == "links":
            if len(parts) != 5:
                raise TopologyError(f"line {lineno}: expected 'a b capacity_bps prop_delay_us queue_pkts'")
            try:
                cap, prop, q = float(parts[2]), int(parts[3]), int(parts[4])
            except ValueError:
                raise TopologyError(f"line {lineno}: non-numeric link field") from None
            pending_links.append((lineno, parts[0], parts[1], cap, prop, q))
        else:
            raise TopologyError(f"line {lineno}: content outside a section")
    for lineno, a, b, cap, prop, q in pending_links:
        try:
            topo.add_link(a, b, cap, prop, q)
        except TopologyError as e:
            raise TopologyError(f"line {lineno}: {e}") from None
    return topo.validate()


def load_topology(path) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return parse_topology(fh.read())


def dump_topology(topo: Topology) -> str:
    out = ["[nodes]"]
    for n in topo.nodes.values():
        out.append(f"{n.id} {n.role.value}" + (f" {n.attach}" if n.attach else ""))
    out.append("[links]")
    for link in topo.links.values():
        cap = int(link.capacity_bps) if link.capacity_bps == int(link.capacity_bps) else link.capacity_bps
        out.append(f"{link.a} {link.b} {cap} {link.prop_delay_us} {link.queue_pkts}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------- builtin generator

N_EDGE = 8
N_BACKBONE = 8
AREA_HOMING = ((0, 3), (1, 4), (2, 5))  # backbone neighbours of a1..a3


def paper_like(n_clients: int = 8, n_bots: int = 0, capacity_bps: float = 100e6,
               prop_delay_us: int = 100, queue_pkts: int = 100) -> Topology:
    """Deterministic 20-switch network with a target behind a 3-link cut.

    Layout: eight edge switches ``e0..e7`` carry clients and bots; eight
    backbone switches ``b0..b7`` form a ring with four diameter chords; each
    edge switch is dual-homed to ``b_i`` and ``b_{i+1}``. The target server
    hangs off ``t``, which is reached only through ``a1..a3`` (the cut). Each
    ``a_j`` hosts one decoy and is dual-homed into the backbone, so most
    clients and bots have two equal-length ways into the target area.
    Entry links ``L000..L005`` come first, then the cut ``L006..L008``.
    """
    if n_clients < 1:
        raise TopologyError("need at least one client")
    topo = Topology()
    edges = [f"e{i}" for i in range(N_EDGE)]
    backbone = [f"b{i}" for i in range(N_BACKBONE)]
    area = ["a1", "a2", "a3"]
    for s in edges + backbone + area + ["t"]:
        topo.add_node(s, Role.SWITCH)

    def link(a, b):
        topo.add_link(a, b, capacity_bps, prop_delay_us, queue_pkts)

    for a, (x, _) in zip(area, AREA_HOMING):
        link(backbone[x], a)
    for a, (_, y) in zip(area, AREA_HOMING):
        link(backbone[y], a)
    for a in area:
        link(a, "t")
    for i in range(N_BACKBONE):
        link(backbone[i], backbone[(i + 1) % N_BACKBONE])
    for i in range(N_BACKBONE // 2):
        link(backbone[i], backbone[i + N_BACKBONE // 2])
    for i, e in enumerate(edges):
        link(e, backbone[i])
        link(e, backbone[(i + 1) % N_BACKBONE])

    topo.add_node("target", Role.TARGET, "t")
    link("target", "t")
    for j, a in enumerate(area, 1):
        topo.add_node(f"decoy{j}", Role.DECOY, a)
        link(f"decoy{j}", a)
    for i in range(n_clients):
        sw = edges[i % N_EDGE]
        topo.add_node(f"client{i}", Role.CLIENT, sw)
        link(f"client{i}", sw)
    for i in range(n_bots):
        sw = edges[i % N_EDGE]
        topo.add_node(f"bot{i}", Role.BOT, sw)
        link(f"bot{i}", sw)
    return topo.validate()


def build_topology(spec="paper-like", **kw) -> Topology:
    """``spec`` is ``"paper-like"``, a path to a topology file, or a ready Topology."""
    if isinstance(spec, Topology):
        return spec.validate()
    if spec in ("paper-like", "builtin"):
        return paper_like(**kw)
    return load_topology(spec)
