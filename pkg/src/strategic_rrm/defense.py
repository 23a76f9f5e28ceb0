"""Defender policies: no defense, periodic route mutation, and the belief/equilibrium-driven strategic policy."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .belief import BeliefLedger, BeliefWeights
from .equilibrium import lambda_star, theta_star
from .game import DegenerateGameError, PayoffParams, SenderAction

NONE, PERIODIC, LAMBDA, THETA = "none", "periodic", "lambda_condition", "theta_condition"


@dataclass(frozen=True)
class DefenseDecision:
    mutate: bool
    triggered_by: str = NONE
    client: Optional[str] = None  # the client behind a theta_condition trigger

    def __post_init__(self):
        if (self.triggered_by == NONE) == self.mutate:
            raise ValueError("triggered_by must be 'none' exactly when mutate is False")


@dataclass
class DecisionRecord:
    sim_time_s: float
    epoch_n: int
    mutate: bool
    trigger: str
    max_theta: float
    theta_star: float
    lam: float
    lambda_star: float


class NoDefense:
    name = "none"
    period = None

    def on_packet(self, client, signal: SenderAction, now: float) -> None:
        pass

    def on_epoch_boundary(self, now: float) -> DefenseDecision:
        raise RuntimeError("NoDefense has no epochs")


@dataclass
class PeriodicRRM:
    period: float = 60.0
    epoch: int = 1

    name = "periodic"

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")

    def on_packet(self, client, signal: SenderAction, now: float) -> None:
        pass

    def on_epoch_boundary(self, now: float) -> DefenseDecision:
        self.epoch += 1
        return DefenseDecision(True, PERIODIC)


@dataclass
class EpochState:
    n: int = 1
    recon_clients: set = field(default_factory=set)


class StrategicRRM:
    """Mutate at the end of a period when the equilibrium conditions call for it.

    Every packet updates the sender's belief. At each period boundary the
    policy mutates if reconnaissance was seen during the period and either
    the defense gain clears its threshold (checked first) or the most
    suspicious recon sender's belief clears the belief threshold. With
    ``gated=False`` the recon requirement is dropped and the belief check
    runs over every client.
    """

    name = "strategic"

    def __init__(self, params: PayoffParams, clients, weights: BeliefWeights | None = None,
                 gated: bool = True, initial_belief: float = 0.0):
        self.params = params
        self.period = 1.0 / params.f
        self.gated = gated
        self.ledger = BeliefLedger(clients, initial_belief, weights)
        self.epoch = EpochState()
        self.last_max_theta = 0.0

    def thresholds(self) -> tuple[float, float]:
        try:
            ts = theta_star(self.params)
        except DegenerateGameError:
            ts = math.inf
        return ts, lambda_star(self.params)

    def on_packet(self, client, signal: SenderAction, now: float) -> None:
        ledger = self.ledger
        if client not in ledger.beliefs:
            return
        ledger.observe_packet(client, signal)
        if signal is SenderAction.RECON:
            self.epoch.recon_clients.add(client)

    def on_epoch_boundary(self, now: float) -> DefenseDecision:
        ts, ls = self.thresholds()
        suspects = self.epoch.recon_clients if self.gated else self.ledger.beliefs.keys()
        decision = DefenseDecision(False)
        if suspects or not self.gated:
            if self.params.lam >= ls:
                decision = DefenseDecision(True, LAMBDA)
            elif suspects:
                top = max(sorted(suspects), key=lambda c: self.ledger[c])
                if self.ledger[top] >= ts:
                    decision = DefenseDecision(True, THETA, top)
        self.last_max_theta = self.ledger.max_belief(suspects) if suspects else 0.0
        self.epoch.recon_clients = set()
        self.epoch.n += 1
        return decision


DefenseStrategy = Union[NoDefense, PeriodicRRM, StrategicRRM]


def on_packet(strategy: DefenseStrategy, client, signal: SenderAction, now: float) -> None:
    strategy.on_packet(client, signal, now)


def on_epoch_boundary(strategy: DefenseStrategy, now: float) -> DefenseDecision:
    return strategy.on_epoch_boundary(now)


def mutation_count(decisions) -> int:
    return sum(1 for d in decisions if d.mutate)


def epoch_times_us(period_s: float, duration_s: float) -> list[int]:
    """Boundaries n * period for n = 1 .. floor(duration / period), in µs."""
    p = int(round(period_s * 1_000_000))
    d = int(round(duration_s * 1_000_000))
    return [n * p for n in range(1, d // p + 1)]


def write_decisions_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sim_time_s", "epoch_n", "mutate", "trigger", "max_theta", "theta_star", "lambda", "lambda_star"])
        for r in records:
            w.writerow([f"{r.sim_time_s:.6f}", r.epoch_n, int(r.mutate), r.trigger,
                        repr(r.max_theta), repr(r.theta_star), repr(r.lam), repr(r.lambda_star)])
