"""Assemble a scenario, run it, and reduce the trace to loss/delay/overhead metrics."""
from __future__ import annotations

import csv
import io
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .attacker import CrossfireAttacker
from .defense import (DecisionRecord, NoDefense, PeriodicRRM, StrategicRRM, epoch_times_us,
                      mutation_count)
from .netsim.engine import US, DropReason, PacketKind, Simulator
from .netsim.routing import install_initial_routes
from .netsim.topology import Role, build_topology
from .scenario import ScenarioConfig, StrategySpec

# per-subsystem seed offsets
TRAFFIC_STREAM, ATTACK_STREAM, MUTATION_STREAM = 1, 2, 3

SUMMARY_FIELDS = ["scenario_id", "strategy", "attacker_behavior", "attacker_capability", "seed",
                  "total_pkts", "lost_pkts", "loss_pct", "avg_delay_us", "mutation_count",
                  "delivered_pkts", "update_window_drops", "queue_drops", "in_flight_pkts"]


@dataclass
class Bucket:
    start_s: float
    delivered: int = 0
    dropped: int = 0
    delay_sum: int = 0

    @property
    def avg_delay_us(self) -> float:
        return self.delay_sum / self.delivered if self.delivered else 0.0


@dataclass
class MetricsReport:
    """Outcome for legitimate clients' packets. ``loss_pct`` is the ratio dropped / total."""

    scenario_id: str
    strategy: str
    attacker_behavior: str
    attacker_capability: str
    seed: int
    total_pkts: int
    delivered_pkts: int
    lost_pkts: int
    loss_pct: float
    avg_delay_us: float
    mutation_count: int
    update_window_drops: int
    queue_drops: int
    in_flight_pkts: int
    per_client_delay_us: dict = field(default_factory=dict)
    buckets: list = field(default_factory=list)

    @property
    def update_window_drop_pct(self) -> float:
        return self.update_window_drops / self.total_pkts if self.total_pkts else 0.0

    def summary_row(self) -> dict:
        return {k: getattr(self, k) for k in SUMMARY_FIELDS}


@dataclass
class RunResult:
    config: ScenarioConfig
    report: MetricsReport
    decisions: list
    sim: Simulator
    attacker: Optional[CrossfireAttacker]


def make_strategy(spec: StrategySpec, cfg: ScenarioConfig, senders):
    if spec.kind == "none":
        return NoDefense()
    if spec.kind == "periodic":
        return PeriodicRRM(spec.period)
    return StrategicRRM(cfg.params, senders, cfg.weights, gated=spec.gated)


def run_scenario_full(cfg: ScenarioConfig) -> RunResult:
    att = cfg.attacker
    n_bots = att.n_bots if att else 0
    kw = {}
    if cfg.topology in ("paper-like", "builtin"):
        kw = dict(n_clients=cfg.n_clients, n_bots=n_bots, capacity_bps=cfg.link_capacity_bps,
                  prop_delay_us=cfg.prop_delay_us, queue_pkts=cfg.queue_pkts)
    topo = build_topology(cfg.topology, **kw)
    clients = topo.by_role(Role.CLIENT)
    bots = topo.by_role(Role.BOT)
    if att and len(bots) < n_bots:
        raise ValueError(f"topology provides {len(bots)} bots, attacker needs {n_bots}")
    target = topo.target

    routing = install_initial_routes(topo, [(c, target) for c in clients], k=cfg.k_paths)
    for b in bots[:n_bots]:
        routing.add_pair(topo, b, target)
        for d in topo.decoys:
            routing.add_pair(topo, b, d)
    sim = Simulator(topo, routing, cfg.update_duration_us)

    traffic_rng = random.Random(cfg.seed + TRAFFIC_STREAM)
    for c in clients:
        offset = traffic_rng.uniform(0.0, 1.0 / cfg.client_rate)
        sim.inject_flow(c, target, cfg.client_rate, cfg.pkt_size, offset, cfg.duration,
                        jitter_rng=traffic_rng if cfg.jitter else None)

    strategy = make_strategy(cfg.strategy, cfg, clients + bots[:n_bots])
    decisions: list[DecisionRecord] = []
    if strategy.period is not None:
        if isinstance(strategy, StrategicRRM):
            on_packet = strategy.on_packet
            signals = {k: k.signal for k in PacketKind}
            sim.packet_observers.append(lambda pkt, now: on_packet(pkt.src, signals[pkt.kind], now / US))
        mut_rng = random.Random(cfg.seed + MUTATION_STREAM)
        ts, ls = strategy.thresholds() if isinstance(strategy, StrategicRRM) else (math.nan, math.nan)
        lam = cfg.params.lam if isinstance(strategy, StrategicRRM) else math.nan

        def boundary(s: Simulator):
            epoch = getattr(strategy, "epoch", 0)
            epoch_n = epoch.n if hasattr(epoch, "n") else epoch
            d = strategy.on_epoch_boundary(s.now / US)
            if d.mutate:
                s.mutate(mut_rng, cfg.mutation_mode, cfg.k_paths)
            decisions.append(DecisionRecord(s.now / US, epoch_n, d.mutate, d.triggered_by,
                                            getattr(strategy, "last_max_theta", math.nan), ts, lam, ls))

        for t in epoch_times_us(strategy.period, cfg.duration):
            sim.schedule(t, boundary)

    attacker = None
    if att:
        attacker = CrossfireAttacker(att, topo, sim, random.Random(cfg.seed + ATTACK_STREAM), cfg.duration,
                                     jitter=cfg.jitter)
        attacker.install()

    sim.run(cfg.duration + cfg.drain)
    report = compute_metrics(cfg, sim, set(clients), mutation_count(decisions))
    return RunResult(cfg, report, decisions, sim, attacker)


def run_scenario(cfg: ScenarioConfig) -> MetricsReport:
    return run_scenario_full(cfg).report


def compute_metrics(cfg: ScenarioConfig, sim: Simulator, clients: set, mutations: int) -> MetricsReport:
    width = cfg.bucket_width
    n_buckets = max(1, math.ceil(cfg.duration / width - 1e-9))
    buckets = [Bucket(i * width) for i in range(n_buckets)]
    total = delivered = dropped = uw = qd = 0
    delay_sum = 0
    per_client: dict[str, list[int]] = {c: [0, 0] for c in sorted(clients)}
    for p in sim.packets:
        if p.src not in clients or p.kind is not PacketKind.REGULAR:
            continue
        total += 1
        b = buckets[min(int(p.created / US // width), n_buckets - 1)]
        if p.delivered >= 0:
            delivered += 1
            d = p.delivered - p.created
            delay_sum += d
            b.delivered += 1
            b.delay_sum += d
            pc = per_client[p.src]
            pc[0] += d
            pc[1] += 1
        elif p.drop is not None:
            dropped += 1
            b.dropped += 1
            if p.drop is DropReason.UPDATE_WINDOW_OVERFLOW:
                uw += 1
            else:
                qd += 1
    att = cfg.attacker
    return MetricsReport(
        scenario_id=cfg.scenario_id, strategy=str(cfg.strategy),
        attacker_behavior=att.behavior.value if att else "none",
        attacker_capability=att.capability.value if att else "none",
        seed=cfg.seed, total_pkts=total, delivered_pkts=delivered, lost_pkts=dropped,
        loss_pct=dropped / total if total else 0.0,
        avg_delay_us=delay_sum / delivered if delivered else 0.0,
        mutation_count=mutations, update_window_drops=uw, queue_drops=qd,
        in_flight_pkts=total - delivered - dropped,
        per_client_delay_us={c: (s / n if n else 0.0) for c, (s, n) in per_client.items()},
        buckets=buckets,
    )


# ------------------------------------------------------------------ sweeps

AXES = ("strategy", "period", "attacker-model", "seed")


def sweep_configs(base: ScenarioConfig, axis: str, values) -> list[ScenarioConfig]:
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    out = []
    for v in values:
        if axis == "strategy":
            spec = StrategySpec.parse(str(v))
            cfg = base.with_(strategy=spec, scenario_id=f"{base.scenario_id}-{spec}")
        elif axis == "period":
            spec = StrategySpec("periodic", float(v))
            cfg = base.with_(strategy=spec, scenario_id=f"{base.scenario_id}-{spec}")
        elif axis == "attacker-model":
            cfg = base.with_attacker(str(v)).with_(scenario_id=f"{base.scenario_id}-{v}")
        elif axis == "seed":
            cfg = base.with_(seed=int(v), scenario_id=f"{base.scenario_id}-s{int(v)}")
        else:
            raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
        out.append(cfg)
    return out


def run_sweep(base: ScenarioConfig, axis: str, values, workers: int = 1) -> list[MetricsReport]:
    """One run per value, results in input order regardless of completion order."""
    cfgs = sweep_configs(base, axis, values)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(run_scenario, cfgs))
    return [run_scenario(c) for c in cfgs]


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def summary_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for r in reports:
        row = r.summary_row()
        w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])
    return buf.getvalue()


def read_summary_csv(text: str) -> list[dict]:
    ints = {"seed", "total_pkts", "lost_pkts", "mutation_count", "delivered_pkts",
            "update_window_drops", "queue_drops", "in_flight_pkts"}
    floats = {"loss_pct", "avg_delay_us"}
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: int(v) if k in ints else float(v) if k in floats else v for k, v in row.items()})
    return rows


def timeseries_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bucket_start_s", "delivered", "dropped", "avg_delay_us"])
    for b in report.buckets:
        w.writerow([_fmt(float(b.start_s)), b.delivered, b.dropped, _fmt(b.avg_delay_us)])
    return buf.getvalue()


def median_loss(reports) -> float:
    return statistics.median(r.loss_pct for r in reports)
