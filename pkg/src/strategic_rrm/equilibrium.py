"""Pure-strategy perfect Bayesian equilibria of the route-mutation signaling game.

Two independent routes to the same answer live here: closed-form thresholds
(:func:`theta_star`, :func:`lambda_star`, :func:`classify_pbne`) and an
exhaustive checker of the four equilibrium requirements
(:func:`verify_profile`, :func:`enumerate_pbne_bruteforce`).
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .game import (
    DefenderAction,
    DegenerateGameError,
    PayoffParams,
    SenderAction,
    SenderType,
    expected_defender_payoff,
    sender_payoff,
)

N, G = SenderAction.RECON, SenderAction.REGULAR
R, RBAR = DefenderAction.MUTATE, DefenderAction.NO_MUTATE

# slack for "maximizes" comparisons so that exact algebraic ties survive rounding
TOL = 1e-9


class DegeneratePriorError(ValueError):
    pass


class PbneLabel(Enum):
    PBNE1 = 1
    PBNE2 = 2
    PBNE3 = 3
    PBNE4 = 4


class Kind(Enum):
    POOLING = "pooling"
    SEPARATING = "separating"


@dataclass(frozen=True)
class StrategyProfile:
    sender: tuple[SenderAction, SenderAction]  # (bot, legitimate)
    defender: tuple[DefenderAction, DefenderAction]  # (after RECON, after REGULAR)

    def action_for(self, m: SenderAction) -> DefenderAction:
        return self.defender[0] if m is N else self.defender[1]

    def signal_of(self, t: SenderType) -> SenderAction:
        return self.sender[0] if t is SenderType.BOT else self.sender[1]

    @property
    def kind(self) -> Kind:
        return Kind.POOLING if self.sender[0] is self.sender[1] else Kind.SEPARATING

    def short(self) -> str:
        s = ",".join(m.value for m in self.sender)
        d = ",".join(a.value for a in self.defender)
        return f"{{({s}),({d})}}"


ALL_PROFILES: tuple[StrategyProfile, ...] = tuple(
    StrategyProfile((m1, m2), (a1, a2))
    for m1, m2 in itertools.product((N, G), repeat=2)
    for a1, a2 in itertools.product((R, RBAR), repeat=2)
)

LABEL_PROFILES = {
    PbneLabel.PBNE1: StrategyProfile((N, N), (R, RBAR)),
    PbneLabel.PBNE2: StrategyProfile((N, N), (RBAR, RBAR)),
    PbneLabel.PBNE3: StrategyProfile((N, G), (R, RBAR)),
    PbneLabel.PBNE4: StrategyProfile((N, G), (RBAR, RBAR)),
}


@dataclass(frozen=True)
class BeliefPair:
    p: float  # P(bot | RECON)
    q: float  # P(bot | REGULAR)

    def at(self, m: SenderAction) -> float:
        return self.p if m is N else self.q


@dataclass(frozen=True)
class Verdict:
    holds: bool
    requirement: Optional[str] = None
    detail: str = ""

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class VerifiedEquilibrium:
    profile: StrategyProfile
    beliefs: BeliefPair
    free: tuple[bool, bool]  # (p unconstrained, q unconstrained): off-path coordinates
    kind: Kind = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", self.profile.kind)


# ---------------------------------------------------------------- thresholds

def theta_star(p: PayoffParams) -> float:
    """Belief at which mutating and not mutating after RECON pay the defender equally.

    May exceed 1, in which case mutating is never a best response to RECON.
    """
    denom = p.lam + p.delta + p.alpha * (1.0 - 1.0 / p.f)
    if denom <= 0:
        raise DegenerateGameError(f"belief threshold undefined: denominator {denom} <= 0")
    return (p.delta + p.c) / denom


def theta_star_paper_form(p: PayoffParams) -> float:
    """Alternative closed form (delta + c) / (delta + alpha (1 + lam - 1/f)).

    Documentation only: it agrees with :func:`theta_star` when alpha == 1 and
    otherwise is not the payoff-equality root. Classification never uses it.
    """
    denom = p.delta + p.alpha * (1.0 + p.lam - 1.0 / p.f)
    if denom <= 0:
        raise DegenerateGameError(f"alternative threshold undefined: denominator {denom} <= 0")
    return (p.delta + p.c) / denom


def lambda_star(p: PayoffParams) -> float:
    return p.alpha * (1.0 / p.f - 1.0) + p.c


def classify_pbne(p: PayoffParams, theta: float) -> set[PbneLabel]:
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    ts, ls = theta_star(p), lambda_star(p)
    out = set()
    if theta >= ts:
        out.add(PbneLabel.PBNE1)
    if theta <= ts:
        out.add(PbneLabel.PBNE2)
    if p.lam >= ls:
        out.add(PbneLabel.PBNE3)
    if p.lam <= ls:
        out.add(PbneLabel.PBNE4)
    return out


def profiles_for(labels) -> set[StrategyProfile]:
    return {LABEL_PROFILES[lab] for lab in labels}


# ------------------------------------------------------------ brute force

def _posterior(profile: StrategyProfile, m: SenderAction, theta: float) -> Optional[float]:
    """Bayes posterior P(bot | m), or None when m is off the equilibrium path."""
    bot = profile.sender[0] is m
    legit = profile.sender[1] is m
    if bot and legit:
        return theta
    if bot:
        return 1.0
    if legit:
        return 0.0
    return None


def _sender_deviation(profile: StrategyProfile, p: PayoffParams) -> Optional[SenderType]:
    for t in (SenderType.BOT, SenderType.LEGITIMATE):
        m = profile.signal_of(t)
        u = sender_payoff(t, m, profile.action_for(m), p)
        other = G if m is N else N
        u_dev = sender_payoff(t, other, profile.action_for(other), p)
        if u_dev > u + TOL:
            return t
    return None


def _defender_suboptimal(profile: StrategyProfile, beliefs: BeliefPair, p: PayoffParams) -> Optional[SenderAction]:
    for m in (N, G):
        mu = beliefs.at(m)
        chosen = profile.action_for(m)
        other = RBAR if chosen is R else R
        if (expected_defender_payoff(m, mu, other, p)
                > expected_defender_payoff(m, mu, chosen, p) + TOL):
            return m
    return None


def verify_profile(profile: StrategyProfile, beliefs: BeliefPair, p: PayoffParams, theta: float) -> Verdict:
    """Check the four requirements of a pure-strategy PBNE for one profile and belief pair.

    Sender rationality (R3) is checked before belief consistency because it
    does not depend on beliefs at all.
    """
    if not (0.0 < theta < 1.0):
        raise DegeneratePriorError(f"prior theta must lie strictly inside (0, 1), got {theta}")
    for name, v in (("p", beliefs.p), ("q", beliefs.q)):
        if not (0.0 <= v <= 1.0) or math.isnan(v):
            return Verdict(False, "R1", f"belief {name}={v} is not a probability")

    dev = _sender_deviation(profile, p)
    if dev is not None:
        to = G if profile.signal_of(dev) is N else N
        return Verdict(False, "R3", f"{dev.name} deviates to {to.name}")

    for m in (N, G):
        post = _posterior(profile, m, theta)
        if post is not None and abs(beliefs.at(m) - post) > 1e-12:
            return Verdict(False, "R4", f"belief after {m.name} is {beliefs.at(m)}, Bayes gives {post}")

    bad = _defender_suboptimal(profile, beliefs, p)
    if bad is not None:
        return Verdict(False, "R2", f"defender response to {bad.name} is not a best response")
    return Verdict(True)


def belief_grid(step: float) -> list[float]:
    n = int(math.floor(1.0 / step + 1e-9))
    pts = [min(i * step, 1.0) for i in range(n + 1)]
    if pts[-1] < 1.0:
        pts.append(1.0)
    return pts


def enumerate_pbne_bruteforce(p: PayoffParams, theta: float, belief_grid_step: float = 0.01) -> list[VerifiedEquilibrium]:
    if not (0.0 < theta < 1.0):
        raise DegeneratePriorError(f"prior theta must lie strictly inside (0, 1), got {theta}")
    if not (0.0 < belief_grid_step <= 0.1):
        raise ValueError(f"belief_grid_step must lie in (0, 0.1], got {belief_grid_step}")
    grid = belief_grid(belief_grid_step)
    found = []
    for prof in ALL_PROFILES:
        if _sender_deviation(prof, p) is not None:
            continue
        post_n = _posterior(prof, N, theta)
        post_g = _posterior(prof, G, theta)
        ps = [post_n] if post_n is not None else grid
        qs = [post_g] if post_g is not None else grid
        for bp, bq in itertools.product(ps, qs):
            beliefs = BeliefPair(bp, bq)
            if verify_profile(prof, beliefs, p, theta):
                found.append(VerifiedEquilibrium(prof, beliefs, (post_n is None, post_g is None)))
                break
    return found


# ------------------------------------------------------- randomized sweep

@dataclass
class SweepReport:
    samples: int
    seed: int
    mismatches: list = field(default_factory=list)
    forbidden: list = field(default_factory=list)  # (G,G) or (G,N) profiles found
    skipped_near_threshold: int = 0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.mismatches and not self.forbidden


def sample_params(rng: random.Random) -> tuple[PayoffParams, float]:
    def pos(hi):
        return hi - rng.random() * hi  # (0, hi]
    params = PayoffParams(
        alpha=pos(10.0), lam=pos(10.0),
        beta=rng.uniform(0, 10), delta=rng.uniform(0, 10), c=rng.uniform(0, 10),
        f=rng.uniform(1, 10),
    )
    return params, rng.uniform(0.01, 0.99)


def near_threshold(p: PayoffParams, theta: float, eps: float = 1e-6) -> bool:
    """True at knife edges where the threshold table and a tie-inclusive check may disagree.

    ``c`` near zero belongs here: mutating after REGULAR is then free, so it
    ties with not mutating and extra (R, R) profiles appear.
    """
    return abs(theta - theta_star(p)) < eps or abs(p.lam - lambda_star(p)) < eps or p.c < eps


def oracle_agreement_sweep(samples: int, seed: int, step: float = 0.01) -> SweepReport:
    """Compare brute-force enumeration against threshold classification on random games."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    rep = SweepReport(samples, seed)
    t0 = time.perf_counter()
    done = 0
    while done < samples:
        params, theta = sample_params(rng)
        if near_threshold(params, theta):
            rep.skipped_near_threshold += 1
            continue
        done += 1
        brute = {eq.profile for eq in enumerate_pbne_bruteforce(params, theta, step)}
        expected = profiles_for(classify_pbne(params, theta))
        if brute != expected:
            rep.mismatches.append((params, theta, sorted(x.short() for x in brute),
                                   sorted(x.short() for x in expected)))
        for prof in brute:
            if prof.sender[0] is G:
                rep.forbidden.append((params, theta, prof.short()))
    rep.seconds = time.perf_counter() - t0
    return rep
