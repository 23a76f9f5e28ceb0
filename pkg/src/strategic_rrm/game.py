"""Signaling game between a client (bot or legitimate user) and the route-mutating defender."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class SenderType(Enum):
    BOT = "bot"
    LEGITIMATE = "legitimate"


class SenderAction(Enum):
    RECON = "N"
    REGULAR = "G"


class DefenderAction(Enum):
    MUTATE = "R"
    NO_MUTATE = "R-bar"


class GameParamError(ValueError):
    pass


class DegenerateGameError(ValueError):
    pass


@dataclass(frozen=True)
class PayoffParams:
    """Scalar game parameters.

    alpha: attacker gain (packet-loss units); beta: bot rental cost;
    delta: cost of misleading legitimate users; lam: defense gain;
    c: cost of applying a mutation; f: mutation frequency (>= 1).
    """

    alpha: float = 3.0
    beta: float = 0.0
    delta: float = 9.0
    lam: float = 2.3
    c: float = 1.6
    f: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "lam", "c", "f"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise GameParamError(f"{name} must be a finite number, got {v!r}")
        if self.alpha <= 0:
            raise GameParamError(f"alpha must be > 0, got {self.alpha}")
        for name in ("beta", "delta", "lam", "c"):
            if getattr(self, name) < 0:
                raise GameParamError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.f < 1:
            raise GameParamError(f"f must be >= 1, got {self.f}")


@dataclass(frozen=True)
class PayoffPair:
    sender: float
    defender: float


def _check_prob(theta: float, name: str = "theta") -> None:
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {theta}")


def sender_payoff(t: SenderType, m: SenderAction, a: DefenderAction, p: PayoffParams) -> float:
    if t is SenderType.LEGITIMATE:
        return 0.0
    if m is SenderAction.REGULAR:
        return -p.beta
    if a is DefenderAction.MUTATE:
        return p.alpha / p.f - p.beta
    return p.alpha - p.beta


def defender_payoff(t: SenderType, m: SenderAction, a: DefenderAction, p: PayoffParams) -> float:
    mutate = a is DefenderAction.MUTATE
    if t is SenderType.LEGITIMATE:
        return -p.delta - p.c if mutate else 0.0
    if m is SenderAction.RECON:
        return p.lam - p.alpha / p.f - p.c if mutate else -p.alpha
    return -p.c if mutate else 0.0


def payoffs(t: SenderType, m: SenderAction, a: DefenderAction, p: PayoffParams) -> PayoffPair:
    return PayoffPair(sender_payoff(t, m, a, p), defender_payoff(t, m, a, p))


def expected_defender_payoff(m: SenderAction, theta: float, a: DefenderAction, p: PayoffParams) -> float:
    """Defender payoff averaged over sender types, with ``theta`` the probability of a bot."""
    _check_prob(theta)
    return (theta * defender_payoff(SenderType.BOT, m, a, p)
            + (1.0 - theta) * defender_payoff(SenderType.LEGITIMATE, m, a, p))


def best_response_defender(m: SenderAction, theta: float, p: PayoffParams) -> DefenderAction:
    # ties go to MUTATE
    r = expected_defender_payoff(m, theta, DefenderAction.MUTATE, p)
    rbar = expected_defender_payoff(m, theta, DefenderAction.NO_MUTATE, p)
    return DefenderAction.MUTATE if r >= rbar else DefenderAction.NO_MUTATE


# parameter set used by the reference experiments
DEFAULT_PARAMS = PayoffParams(alpha=3.0, beta=0.0, delta=9.0, lam=2.3, c=1.6, f=1.0)
