"""End-to-end acceptance checks, one test per criterion, each at its stated tolerance."""
import filecmp
import random
import statistics
import time

import pytest

from conftest import line_topology, record_criterion
from test_routing import exhaustive, random_graph

from strategic_rrm.belief import BeliefLedger, BeliefWeights
from strategic_rrm.cli import main
from strategic_rrm.equilibrium import lambda_star, oracle_agreement_sweep, theta_star, theta_star_paper_form
from strategic_rrm.experiment import run_scenario
from strategic_rrm.game import (DEFAULT_PARAMS, DefenderAction, PayoffParams, SenderAction,
                                expected_defender_payoff)
from strategic_rrm.netsim.engine import DropReason, Simulator, min_delay_us
from strategic_rrm.netsim.routing import MutationMode, install_initial_routes, k_shortest_paths
from strategic_rrm.netsim.topology import Role, paper_like
from strategic_rrm.scenario import ScenarioConfig, StrategySpec

N, G = SenderAction.RECON, SenderAction.REGULAR
SEEDS = (1, 2, 3, 4, 5)
RUNTIME_LIMIT_S = 60.0


def check(n, ok, detail):
    record_criterion(n, ok, detail)
    assert ok, detail


# ------------------------------------------------------------------ 1

def test_criterion_1_equilibrium_oracle():
    t0 = time.perf_counter()
    rep = oracle_agreement_sweep(1000, 42, 0.01)
    secs = time.perf_counter() - t0
    ok = rep.passed and not rep.mismatches and not rep.forbidden and secs < 10.0
    check(1, ok, f"1000 samples seed 42: mismatches={len(rep.mismatches)} "
                 f"forbidden (G,G)/(G,N)={len(rep.forbidden)} runtime={secs:.2f}s (< 10 s)")


# ------------------------------------------------------------------ 2

def _bisect(p):
    def diff(th):
        return (expected_defender_payoff(N, th, DefenderAction.MUTATE, p)
                - expected_defender_payoff(N, th, DefenderAction.NO_MUTATE, p))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if diff(mid) < 0 else (lo, mid)
    return (lo + hi) / 2


def test_criterion_2_thresholds():
    p = DEFAULT_PARAMS
    ls, ts, tp = lambda_star(p), theta_star(p), theta_star_paper_form(p)
    root = _bisect(p)
    differ = all(abs(theta_star(q) - theta_star_paper_form(q)) > 1e-6
                 for q in (PayoffParams(alpha=a, delta=9, lam=2.3, c=1.6, f=2) for a in (0.5, 2.0, 3.0, 7.0)))
    coincide = all(abs(theta_star(q) - theta_star_paper_form(q)) < 1e-12
                   for q in (PayoffParams(alpha=1, delta=d, lam=l, c=1.6, f=f)
                             for d in (1, 9) for l in (0.5, 2.3) for f in (1, 3)))
    ok = (ls == 1.6 and abs(ts - 10.6 / 11.3) < 1e-9 and abs(root - ts) < 1e-9
          and abs(tp - 10.6 / 15.9) < 1e-9 and differ and coincide)
    check(2, ok, f"lambda*={ls!r} theta*={ts:.12f} bisection={root:.12f} alternative form={tp:.12f} "
                 f"differs for alpha!=1: {differ}, coincides for alpha=1: {coincide}")


# ------------------------------------------------------------------ 3

def test_criterion_3_belief_dynamics():
    w = BeliefWeights(0.9, 0.09, 0.01)
    led = BeliefLedger(["y"], 0.0, w)
    steps = next((k for k in range(1, 1001) if led.observe_packet("y", N) >= 0.9999), None)

    quiet = BeliefLedger([f"c{i}" for i in range(10)], 0.0, w)
    for i in range(5000):
        quiet.observe_packet(f"c{i % 10}", G)
    all_zero = all(v == 0.0 for v in quiet.beliefs.values())

    rng = random.Random(7)
    fuzz = BeliefLedger([f"c{i}" for i in range(20)], rng.random(), w)
    bounded = True
    for _ in range(100_000):
        v = fuzz.observe_packet(f"c{rng.randrange(20)}", N if rng.random() < 0.5 else G)
        bounded &= 0.0 <= v <= 1.0
    bounded &= all(0.0 <= v <= 1.0 for v in fuzz.beliefs.values())

    ok = steps is not None and all_zero and bounded
    check(3, ok, f"all-Recon reaches 0.9999 after {steps} observations (<= 1000); "
                 f"all-Regular stays 0: {all_zero}; 1e5-step fuzz within [0,1]: {bounded}")


# ------------------------------------------------------------------ 4

OVERHEAD_BASE = ScenarioConfig(seed=1, duration=180.0, n_clients=24)


def test_criterion_4_rrm_overhead_ordering():
    pct = {}
    for period in (10, 30, 60):
        r = run_scenario(OVERHEAD_BASE.with_(strategy=StrategySpec("periodic", float(period))))
        pct[period] = 100 * r.update_window_drop_pct
    ok = pct[10] > pct[30] > pct[60] and pct[60] < 0.5 * pct[10]
    check(4, ok, "update-window drops " + " > ".join(f"{p}s={v:.4f}%" for p, v in pct.items())
                 + f"; 60s < half of 10s: {pct[60] < 0.5 * pct[10]}")


# ------------------------------------------------------------------ 5 and 6

ATTACK_BASE = ScenarioConfig(seed=1)


@pytest.fixture(scope="module")
def attack_runs():
    """(label, strategy, seed) -> (report, cpu seconds, wall seconds) at default scale."""
    runs = {}
    cases = [("strong-aggressive", s) for s in ("none", "periodic:60", "strategic")]
    for seed in SEEDS:
        for label, strat in cases + ([("decent-aggressive", "none")] if seed == SEEDS[0] else []):
            cfg = ATTACK_BASE.with_(seed=seed, strategy=StrategySpec.parse(strat)).with_attacker(label)
            c0, w0 = time.process_time(), time.perf_counter()
            rep = run_scenario(cfg)
            runs[(label, strat, seed)] = (rep, time.process_time() - c0, time.perf_counter() - w0)
    return runs


def test_criterion_5_strategy_ordering(attack_runs):
    def med(strat, field):
        return statistics.median(getattr(attack_runs[("strong-aggressive", strat, s)][0], field) for s in SEEDS)

    loss = {s: med(s, "loss_pct") for s in ("none", "periodic:60", "strategic")}
    muts = {s: med(s, "mutation_count") for s in ("periodic:60", "strategic")}
    quiet = run_scenario(ATTACK_BASE.with_(strategy=StrategySpec("strategic")))
    cpu = max(v[1] for v in attack_runs.values())
    wall = max(v[2] for v in attack_runs.values())
    ok = (loss["none"] > loss["periodic:60"]
          and loss["strategic"] <= 1.1 * loss["periodic:60"]
          and muts["strategic"] < muts["periodic:60"]
          and quiet.mutation_count == 0
          and cpu <= RUNTIME_LIMIT_S)
    check(5, ok, f"median loss none={100 * loss['none']:.3f}% > periodic60={100 * loss['periodic:60']:.3f}% "
                 f">= strategic/1.1 (strategic={100 * loss['strategic']:.3f}%); median mutations "
                 f"strategic={muts['strategic']} < periodic60={muts['periodic:60']}; no-attacker strategic "
                 f"mutations={quiet.mutation_count}; slowest run cpu={cpu:.1f}s wall={wall:.1f}s (limit 60 s)")


def test_criterion_6_capability_scaling(attack_runs):
    seed = SEEDS[0]
    strong = attack_runs[("strong-aggressive", "none", seed)][0].loss_pct
    decent = attack_runs[("decent-aggressive", "none", seed)][0].loss_pct
    ratio = strong / decent if decent else float("inf")
    bot_ratio = 2  # strong rents twice the botnet
    superlinear = ratio > bot_ratio
    ok = strong >= 2 * decent and strong > 0
    check(6, ok, f"seed {seed} NoDefense: strong={100 * strong:.3f}% decent={100 * decent:.3f}% "
                 f"ratio={ratio:.2f} (>= 2); super-linear in bots (non-blocking): {superlinear}")


# ------------------------------------------------------------------ 7

def _conservation_million_events():
    topo = paper_like(n_clients=24, capacity_bps=10e6)
    clients = topo.by_role(Role.CLIENT)
    sim = Simulator(topo, install_initial_routes(topo, [(c, "target") for c in clients]), 50_000)
    rng = random.Random(3)
    for c in clients:
        sim.inject_flow(c, "target", 150, 1000, rng.uniform(0, 0.01), 60, jitter_rng=rng)
    for t in range(1, 60):
        sim.schedule(t * 1_000_000, lambda s: s.mutate(rng, MutationMode.ANY_SIZE))
    bad = [0]

    def hook(s):
        if not s.conservation_holds():
            bad[0] += 1
    sim.event_hook = hook
    sim.run(62)
    reasons = {p.drop for p in sim.packets if p.drop}
    return sim.events_processed, bad[0], reasons


def _closed_form_delay():
    topo = line_topology(cap=10e6, prop=100, queue=100, n_switches=1)
    sim = Simulator(topo, install_initial_routes(topo, [("h1", "h2")]), 0)
    pkt = sim.send_packet("h1", "h2", 1000)
    sim.run(1)
    return pkt.delivered - pkt.created, min_delay_us(sim, pkt)


def _identical_csvs(tmp_path):
    scn = tmp_path / "det.scn"
    scn.write_text("seed = 9\nstrategy = strategic\nduration = 90\nattacker = strong-aggressive\n")
    dirs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", str(scn), "--out", str(out), "--trace"]) == 0
        dirs.append(out)
    names = ["summary.csv", "timeseries.csv", "decisions.csv", "trace.csv", "attack_schedule.csv",
             "attack_plan.csv"]
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    return len(match), len(names)


def _kshortest_100():
    rng = random.Random(99)
    agree = 0
    for _ in range(100):
        topo = random_graph(rng, rng.randint(1, 5))  # at most 8 nodes with the three hosts
        truth = exhaustive(topo, "src", "dst")
        k = rng.randint(1, 8)
        got = [(r.hops, r.links) for r in k_shortest_paths(topo, "src", "dst", k)]
        agree += got == truth[:k]
    return agree


def test_criterion_7_simulator_correctness(tmp_path):
    events, violations, reasons = _conservation_million_events()
    delay, closed = _closed_form_delay()
    same, total = _identical_csvs(tmp_path)
    agree = _kshortest_100()
    both_reasons = reasons == {DropReason.QUEUE_OVERFLOW, DropReason.UPDATE_WINDOW_OVERFLOW}
    ok = (events >= 1_000_000 and violations == 0 and both_reasons and delay == closed == 1800
          and same == total and agree == 100)
    check(7, ok, f"conservation violations={violations} over {events} events (both drop kinds seen: "
                 f"{both_reasons}); delay={delay}us closed form={closed}us; identical CSVs {same}/{total}; "
                 f"k-shortest agreement {agree}/100")
