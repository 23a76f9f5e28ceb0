
import pytest
from hypothesis import given, settings, strategies as st

from strategic_rrm.defense import (LAMBDA, NONE, PERIODIC, THETA, DecisionRecord, DefenseDecision, NoDefense,
                                   PeriodicRRM, StrategicRRM, epoch_times_us, mutation_count, on_epoch_boundary,
                                   on_packet, write_decisions_csv)
from strategic_rrm.game import DEFAULT_PARAMS, PayoffParams, SenderAction as M

N, G = M.RECON, M.REGULAR
# lam below lambda_star: the lambda branch never fires
THETA_ONLY = PayoffParams(alpha=3, delta=0.1, lam=0.1, c=1.6, f=1)


def test_decision_invariant():
    with pytest.raises(ValueError):
        DefenseDecision(True, NONE)
    with pytest.raises(ValueError):
        DefenseDecision(False, PERIODIC)


def test_periodic_always_mutates():
    s = PeriodicRRM(30)
    d = on_epoch_boundary(s, 30.0)
    assert d.mutate and d.triggered_by == PERIODIC
    with pytest.raises(ValueError):
        PeriodicRRM(0)


def test_no_defense_has_no_epochs():
    assert NoDefense().period is None
    with pytest.raises(RuntimeError):
        NoDefense().on_epoch_boundary(1.0)


def test_strategic_lambda_branch_needs_recon():
    s = StrategicRRM(DEFAULT_PARAMS, ["a", "b"])
    assert s.period == 1.0
    on_packet(s, "a", G, 0.1)
    assert not s.on_epoch_boundary(1.0).mutate
    on_packet(s, "b", N, 1.2)
    d = s.on_epoch_boundary(2.0)
    assert d.mutate and d.triggered_by == LAMBDA
    assert not s.on_epoch_boundary(3.0).mutate  # recon set was cleared
    assert s.epoch.n == 4


def test_theta_branch_when_lambda_check_is_bypassed():
    s = StrategicRRM(DEFAULT_PARAMS, ["a"])
    ts, _ = s.thresholds()
    s.params = PayoffParams(alpha=3, delta=9, lam=0.0, c=1.6, f=1)  # fails the lambda check
    s.thresholds = lambda: (ts, 1.6)  # keep the default belief threshold below 1
    steps = 0
    while steps < 2000:
        on_packet(s, "a", N, steps)
        steps += 1
        d = s.on_epoch_boundary(steps)
        if d.mutate:
            break
        assert s.ledger["a"] < ts
    assert d.triggered_by == THETA and d.client == "a" and s.ledger["a"] >= ts


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 10), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10), st.floats(1, 10))
def test_theta_branch_unreachable_with_consistent_thresholds(alpha, delta, lam, c, f):
    """Whenever the lambda condition fails, the belief threshold is at least 1.

    theta_star < 1 rearranges to lam > lambda_star, so with thresholds
    computed from the same parameters the belief branch can only fire when
    the lambda branch already has.
    """
    p = PayoffParams(alpha=alpha, delta=delta, lam=lam, c=c, f=f)
    s = StrategicRRM(p, ["a"])
    ts, ls = s.thresholds()
    if lam < ls:
        assert ts >= 1 - 1e-9


def test_ungated_mutates_every_epoch_when_lambda_holds():
    s = StrategicRRM(DEFAULT_PARAMS, ["a"], gated=False)
    assert all(s.on_epoch_boundary(t).mutate for t in range(1, 6))


def test_unknown_sender_ignored():
    s = StrategicRRM(DEFAULT_PARAMS, ["a"])
    s.on_packet("stranger", N, 0.0)
    assert not s.on_epoch_boundary(1.0).mutate


def test_epoch_times():
    assert epoch_times_us(60, 600) == [n * 60_000_000 for n in range(1, 11)]
    assert epoch_times_us(1, 2.5) == [1_000_000, 2_000_000]
    assert epoch_times_us(10, 5) == []


def test_mutation_count_and_csv(tmp_path):
    recs = [DecisionRecord(1.0, 1, True, LAMBDA, 0.01, 0.9, 2.3, 1.6),
            DecisionRecord(2.0, 2, False, NONE, 0.0, 0.9, 2.3, 1.6)]
    assert mutation_count(recs) == 1
    path = tmp_path / "d.csv"
    write_decisions_csv(recs, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sim_time_s,epoch_n,mutate,trigger,max_theta,theta_star,lambda,lambda_star"
    assert lines[1].startswith("1.000000,1,1,lambda_condition,")


def run_trace(params, trace, n_epochs):
    """trace: list of (epoch index, client, is_recon). Returns the mutation count."""
    s = StrategicRRM(params, ["a", "b", "c"])
    out = 0
    for e in range(n_epochs):
        for _, cl, recon in (x for x in trace if x[0] == e):
            s.on_packet(cl, N if recon else G, e)
        out += s.on_epoch_boundary(e + 1).mutate
    return out


events = st.lists(st.tuples(st.integers(0, 9), st.sampled_from("abc"), st.booleans()), max_size=60)


@settings(max_examples=80, deadline=None)
@given(events, st.sampled_from([DEFAULT_PARAMS, THETA_ONLY]))
def test_at_most_one_mutation_per_epoch(trace, params):
    assert run_trace(params, trace, 10) <= 10


@settings(max_examples=80, deadline=None)
@given(events, st.sampled_from([DEFAULT_PARAMS, THETA_ONLY]))
def test_regular_only_trace_never_mutates(trace, params):
    assert run_trace(params, [(e, c, False) for e, c, _ in trace], 10) == 0


@settings(max_examples=80, deadline=None)
@given(events, st.integers(0, 59), st.sampled_from([DEFAULT_PARAMS, THETA_ONLY]))
def test_adding_recon_never_reduces_mutations(trace, i, params):
    if not trace:
        return
    i %= len(trace)
    more = list(trace)
    e, c, _ = more[i]
    more[i] = (e, c, True)
    assert run_trace(params, more, 10) >= run_trace(params, trace, 10)
