"""Crossfire-style link-flooding attacker: traceroute reconnaissance, target-link choice, decoy flooding."""
from __future__ import annotations

import csv
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .netsim.engine import PacketKind, Simulator
from .netsim.routing import Route, RoutingState
from .netsim.topology import Role, Topology


class Behavior(Enum):
    STEALTHY = "stealthy"
    AGGRESSIVE = "aggressive"


class Capability(Enum):
    DECENT = "decent"
    STRONG = "strong"


class PhaseKind(Enum):
    RECON = "recon"
    IDLE = "idle"
    ATTACK = "attack"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    start: float
    end: float


@dataclass(frozen=True)
class AttackerConfig:
    behavior: Behavior = Behavior.AGGRESSIVE
    capability: Capability = Capability.STRONG
    n_clients: int = 12
    recon_duration: float = 60.0
    target_links: int = 3
    rate: float = 100.0  # packets/s per bot
    pkt_size: int = 1000
    probe_interval: float = 10.0
    stealthy_means: tuple[float, float, float] = (30.0, 60.0, 60.0)  # recon, idle, attack

    def __post_init__(self):
        if self.n_clients < 1:
            raise ValueError("attacker needs n_clients >= 1 to size its botnet")
        if self.recon_duration <= 0 or self.probe_interval <= 0 or self.rate <= 0:
            raise ValueError("recon_duration, probe_interval and rate must be positive")
        if self.target_links < 1:
            raise ValueError("target_links must be >= 1")

    @property
    def n_bots(self) -> int:
        return self.n_clients * (2 if self.capability is Capability.STRONG else 1)

    @property
    def label(self) -> str:
        return f"{self.capability.value}-{self.behavior.value}"


class LinkMap:
    """How often each link showed up in traceroutes toward the target."""

    def __init__(self):
        self.counts: Counter[str] = Counter()
        self.probes = 0
        self.observed: dict[tuple[str, str], Route] = {}  # latest route seen per (bot, destination)

    def add(self, links) -> None:
        self.probes += 1
        self.counts.update(links)

    def observe(self, src: str, dst: str, route: Route) -> None:
        self.observed[(src, dst)] = route

    def known_routes(self) -> RoutingState:
        """The attacker's view of routing: whatever its probes last reported."""
        return RoutingState(installed=dict(self.observed))

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, lid):
        return self.counts[lid]


def select_target_links(link_map: LinkMap, k_t: int) -> list[str]:
    ranked = sorted(link_map.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [lid for lid, n in ranked[:k_t] if n > 0]


def assign_decoys(bots, targets, routing: RoutingState, topo: Topology) -> dict[str, str]:
    """Send each bot to the decoy whose current route crosses the most target links.

    Ties between equally good decoys rotate with the bot's index; when no
    decoy route touches a target link, bot i falls back to decoy i mod #decoys.
    """
    decoys = sorted(topo.decoys)
    tset = set(targets)
    out = {}
    for i, bot in enumerate(bots):
        scores = []
        for d in decoys:
            route = routing.add_pair(topo, bot, d)
            scores.append(len(tset.intersection(route.links)))
        best = max(scores)
        if best == 0:
            out[bot] = decoys[i % len(decoys)]
        else:
            tied = [d for d, s in zip(decoys, scores) if s == best]
            out[bot] = tied[i % len(tied)]
    return out


def build_schedule(config: AttackerConfig, rng: random.Random, total_duration: float) -> list[Phase]:
    if total_duration <= config.recon_duration:
        raise ValueError(f"duration {total_duration}s leaves no time after {config.recon_duration}s of recon")
    if config.behavior is Behavior.AGGRESSIVE:
        return [Phase(PhaseKind.RECON, 0.0, config.recon_duration),
                Phase(PhaseKind.ATTACK, config.recon_duration, float(total_duration))]
    phases = []
    t = 0.0
    kinds = (PhaseKind.RECON, PhaseKind.IDLE, PhaseKind.ATTACK)
    while t < total_duration:
        for kind, mean in zip(kinds, config.stealthy_means):
            if t >= total_duration:
                break
            end = min(t + rng.expovariate(1.0 / mean), float(total_duration))
            if end > t:
                phases.append(Phase(kind, t, end))
            t = end
    return phases


def cycle_count(schedule) -> int:
    return sum(1 for ph in schedule if ph.kind is PhaseKind.RECON)


def run_recon(sim: Simulator, bots, target: str, start: float, end: float, interval: float,
              link_map: Optional[LinkMap] = None, decoys=()) -> LinkMap:
    """Schedule synchronized traceroute rounds from every bot over [start, end).

    Probes toward the target feed the link counters. Probes toward ``decoys``
    only refresh the attacker's record of bot-to-decoy routes.
    """
    link_map = link_map if link_map is not None else LinkMap()
    us = 1_000_000
    t = start
    while t < end:
        def probe_round(s, bots=tuple(bots)):
            for b in bots:
                link_map.add(s.traceroute(b, target))
                link_map.observe(b, target, s.routing.route(b, target))
                for d in decoys:
                    s.traceroute(b, d)
                    link_map.observe(b, d, s.routing.route(b, d))
        sim.schedule(int(round(t * us)), probe_round)
        t += interval
    return link_map


def run_attack_phase(sim: Simulator, assignment: dict, rate: float, start: float, end: float,
                     pkt_size: int = 1000, jitter_rng=None) -> list:
    flows = []
    n = max(len(assignment), 1)
    spread = 1.0 / rate
    for i, (bot, decoy) in enumerate(sorted(assignment.items())):
        # stagger bots across one packet interval so they do not fire in lockstep
        offset = spread * i / n
        if start + offset < end:
            flows.append(sim.inject_flow(bot, decoy, rate, pkt_size, start + offset, end, PacketKind.REGULAR,
                                         jitter_rng))
    return flows


class CrossfireAttacker:
    """Drives a botnet through its phase schedule inside a running simulator."""

    def __init__(self, config: AttackerConfig, topo: Topology, sim: Simulator, rng: random.Random,
                 total_duration: float, jitter: bool = False):
        self.config = config
        self.rng = rng
        self.jitter = jitter
        self.topo = topo
        self.sim = sim
        self.bots = sorted((n for n, node in topo.nodes.items() if node.role is Role.BOT),
                           key=lambda b: int(b[3:]) if b[3:].isdigit() else b)
        if len(self.bots) < config.n_bots:
            raise ValueError(f"topology has {len(self.bots)} bots, attacker needs {config.n_bots}")
        self.bots = self.bots[:config.n_bots]
        self.schedule = build_schedule(config, rng, total_duration)
        self.link_map = LinkMap()
        self.targets: list[str] = []
        self.assignment: dict[str, str] = {}
        self.plans: list[tuple[float, list[str], dict[str, str]]] = []
        for b in self.bots:
            sim.routing.add_pair(topo, b, topo.target)
            for d in topo.decoys:
                sim.routing.add_pair(topo, b, d)

    def install(self) -> None:
        us = 1_000_000
        for ph in self.schedule:
            if ph.kind is PhaseKind.RECON:
                run_recon(self.sim, self.bots, self.topo.target, ph.start, ph.end,
                          self.config.probe_interval, self.link_map, self.topo.decoys)
                self.sim.schedule(int(round(ph.end * us)), self._plan)
            elif ph.kind is PhaseKind.ATTACK:
                self.sim.schedule(int(round(ph.start * us)), lambda s, ph=ph: self._attack(ph))

    def floodable_map(self) -> LinkMap:
        """The link map restricted to links some known bot-to-decoy route crosses."""
        reach = {lid for (src, dst), r in self.link_map.observed.items()
                 if dst != self.topo.target for lid in r.links}
        m = LinkMap()
        m.probes = self.link_map.probes
        m.counts = Counter({lid: n for lid, n in self.link_map.counts.items() if lid in reach})
        return m

    def _plan(self, sim: Simulator) -> None:
        self.targets = select_target_links(self.floodable_map(), self.config.target_links)
        self.assignment = assign_decoys(self.bots, self.targets, self.link_map.known_routes(), self.topo)
        self.plans.append((sim.now / 1e6, list(self.targets), dict(self.assignment)))

    def _attack(self, ph: Phase) -> None:
        if not self.assignment:
            self._plan(self.sim)
        run_attack_phase(self.sim, self.assignment, self.config.rate, ph.start, ph.end, self.config.pkt_size,
                         self.rng if self.jitter else None)

    def write_plan_csv(self, schedule_path, assignment_path) -> None:
        with open(schedule_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["phase", "start_s", "end_s"])
            for ph in self.schedule:
                w.writerow([ph.kind.value, f"{ph.start:.6f}", f"{ph.end:.6f}"])
        with open(assignment_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["plan_time_s", "bot_id", "decoy_id", "target_links"])
            for t, targets, assignment in self.plans:
                for bot, decoy in sorted(assignment.items()):
                    w.writerow([f"{t:.6f}", bot, decoy, " ".join(targets)])
