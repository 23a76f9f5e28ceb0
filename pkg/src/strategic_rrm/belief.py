"""Per-client suspicion tracking.

Each observed packet from client ``y`` moves its belief to::

    theta_y <- theta_y * f1 + mean(theta) * f2 + A * f3

where ``A`` is 1 for reconnaissance packets and 0 otherwise, and the mean is
taken over every tracked client (``y`` included) before the update.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Hashable, Iterable

from .game import SenderAction


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class BeliefWeights:
    f1: float = 0.9
    f2: float = 0.09
    f3: float = 0.01

    def __post_init__(self):
        for v in (self.f1, self.f2, self.f3):
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ConfigurationError(f"belief weights must lie in [0, 1]: {self}")
        if abs(self.f1 + self.f2 + self.f3 - 1.0) > 1e-12:
            raise ConfigurationError(f"belief weights must sum to 1: {self}")


class BeliefLedger:
    """Mutable map of client id to belief that the client is a bot.

    The running sum keeps :meth:`network_average` O(1); it is recomputed
    exactly every ``_RESYNC`` updates to stop float drift.
    """

    _RESYNC = 4096

    def __init__(self, client_ids: Iterable[Hashable], initial: float = 0.0,
                 weights: BeliefWeights | None = None):
        ids = list(client_ids)
        if not ids:
            raise ConfigurationError("belief ledger needs at least one client")
        if len(set(ids)) != len(ids):
            raise ConfigurationError("duplicate client ids")
        if not (0.0 <= initial <= 1.0):
            raise ConfigurationError(f"initial belief must lie in [0, 1], got {initial}")
        self.weights = weights or BeliefWeights()
        self.beliefs = {cid: float(initial) for cid in ids}
        self.observations = {cid: 0 for cid in ids}
        self._sum = float(initial) * len(ids)
        self._since_resync = 0

    @property
    def population(self) -> int:
        return len(self.beliefs)

    def __getitem__(self, client) -> float:
        return self.beliefs[client]

    def __contains__(self, client) -> bool:
        return client in self.beliefs

    def network_average(self) -> float:
        return self._sum / len(self.beliefs)

    def observe_packet(self, client, signal: SenderAction) -> float:
        try:
            prev = self.beliefs[client]
        except KeyError:
            raise KeyError(f"unknown client {client!r}") from None
        w = self.weights
        new = prev * w.f1 + self._sum / len(self.beliefs) * w.f2
        if signal is SenderAction.RECON:
            new += w.f3
        if new > 1.0:
            new = 1.0
        elif new < 0.0:
            new = 0.0
        self.beliefs[client] = new
        self.observations[client] += 1
        self._sum += new - prev
        self._since_resync += 1
        if self._since_resync >= self._RESYNC:
            self._sum = math.fsum(self.beliefs.values())
            self._since_resync = 0
        return new

    def max_belief(self, clients=None) -> float:
        vals = self.beliefs.values() if clients is None else (self.beliefs[c] for c in clients)
        return max(vals, default=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["client_id", "theta", "observation_count"])
            for cid, th in self.beliefs.items():
                w.writerow([cid, repr(th), self.observations[cid]])


def init_ledger(client_ids, initial: float = 0.0, weights: BeliefWeights | None = None) -> BeliefLedger:
    return BeliefLedger(client_ids, initial, weights)


def observe_packet(ledger: BeliefLedger, client, signal: SenderAction) -> float:
    return ledger.observe_packet(client, signal)


def network_average(ledger: BeliefLedger) -> float:
    return ledger.network_average()
