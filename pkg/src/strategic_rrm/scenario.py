"""Scenario files: ``key = value`` lines, optional ``[section]`` headers, ``#`` comments.

Every key belongs to one section; a key may appear before any header, but
under a header it must belong to that header. ``seed`` is mandatory.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .attacker import AttackerConfig, Behavior, Capability
from .belief import BeliefWeights, ConfigurationError
from .game import DEFAULT_PARAMS, GameParamError, PayoffParams
from .netsim.routing import MutationMode


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class StrategySpec:
    kind: str  # none | periodic | strategic
    period: Optional[float] = None
    gated: bool = True

    @classmethod
    def parse(cls, text: str) -> "StrategySpec":
        t = text.strip().lower()
        if t in ("none", "nodefense", "no-defense"):
            return cls("none")
        if t.startswith("periodic"):
            _, _, val = t.partition(":")
            period = float(val) if val else 60.0
            if not (period > 0 and math.isfinite(period)):
                raise ValueError(f"periodic period must be positive, got {val!r}")
            return cls("periodic", period)
        if t == "strategic":
            return cls("strategic")
        if t in ("strategic-ungated", "strategic:ungated"):
            return cls("strategic", gated=False)
        raise ValueError(f"unknown strategy {text!r} (none | periodic:<seconds> | strategic | strategic-ungated)")

    def __str__(self):
        if self.kind == "periodic":
            return f"periodic:{self.period:g}"
        if self.kind == "strategic" and not self.gated:
            return "strategic-ungated"
        return self.kind


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    scenario_id: str = "scenario"
    strategy: StrategySpec = StrategySpec("none")
    duration: float = 600.0
    drain: float = 2.0
    bucket_width: float = 10.0
    # network
    topology: str = "paper-like"
    link_capacity_bps: float = 10e6
    prop_delay_us: int = 100
    queue_pkts: int = 100
    update_duration_us: int = 250_000
    mutation_mode: MutationMode = MutationMode.OPTIMAL_SIZE_ONLY
    k_paths: int = 4
    # traffic
    n_clients: int = 12
    client_rate: float = 100.0
    pkt_size: int = 1000
    jitter: bool = True  # randomize each packet inside its send slot
    # attacker (None = no attacker)
    attacker: Optional[AttackerConfig] = None
    # game
    params: PayoffParams = DEFAULT_PARAMS
    weights: BeliefWeights = BeliefWeights()

    def with_(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def with_attacker(self, label: Optional[str]) -> "ScenarioConfig":
        """``label`` is ``none`` or ``<decent|strong>-<stealthy|aggressive>``."""
        if label is None or label.lower() == "none":
            return self.with_(attacker=None)
        cap, _, beh = label.lower().partition("-")
        base = self.attacker or AttackerConfig(n_clients=self.n_clients, rate=self.client_rate,
                                               pkt_size=self.pkt_size)
        return self.with_(attacker=dataclasses.replace(base, capability=Capability(cap), behavior=Behavior(beh)))


# key -> (section, parser). Attacker and game keys are gathered separately.
def _pos_float(v):
    x = float(v)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"must be a positive number, got {v!r}")
    return x


def _pos_int(v):
    x = int(v)
    if x <= 0:
        raise ValueError(f"must be a positive integer, got {v!r}")
    return x


def _nonneg_float(v):
    x = float(v)
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError(f"must be a non-negative number, got {v!r}")
    return x


def _bool(v):
    t = v.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {v!r}")


def _mode(v):
    v = v.strip().lower()
    aliases = {"optimal": "optimal", "optimal-size": "optimal", "any": "any", "any-size": "any"}
    if v not in aliases:
        raise ValueError(f"mutation_mode must be optimal or any, got {v!r}")
    return MutationMode(aliases[v])


SCHEMA = {
    "seed": ("scenario", int),
    "scenario_id": ("scenario", str),
    "strategy": ("scenario", StrategySpec.parse),
    "duration": ("scenario", _pos_float),
    "drain": ("scenario", _nonneg_float),
    "bucket_width": ("scenario", _pos_float),
    "topology": ("network", str),
    "link_capacity_bps": ("network", _pos_float),
    "prop_delay_us": ("network", _pos_int),
    "queue_pkts": ("network", _pos_int),
    "update_duration_us": ("network", lambda v: int(_nonneg_float(v))),
    "mutation_mode": ("network", _mode),
    "k_paths": ("network", _pos_int),
    "n_clients": ("traffic", _pos_int),
    "client_rate": ("traffic", _pos_float),
    "pkt_size": ("traffic", _pos_int),
    "jitter": ("traffic", _bool),
    "attacker": ("attacker", str),
    "behavior": ("attacker", lambda v: Behavior(v.strip().lower())),
    "capability": ("attacker", lambda v: Capability(v.strip().lower())),
    "recon_duration": ("attacker", _pos_float),
    "target_links": ("attacker", _pos_int),
    "probe_interval": ("attacker", _pos_float),
    "bot_rate": ("attacker", _pos_float),
    "alpha": ("game", float),
    "beta": ("game", float),
    "delta": ("game", float),
    "lambda": ("game", float),
    "c": ("game", float),
    "f": ("game", float),
    "f1": ("game", float),
    "f2": ("game", float),
    "f3": ("game", float),
}
SECTIONS = {"scenario", "network", "traffic", "attacker", "game"}
_GAME_FIELD = {"lambda": "lam"}


def parse_scenario_text(text: str, source: str = "<scenario>") -> ScenarioConfig:
    values: dict = {}
    lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ScenarioError(f"{where}: unknown section [{section}]")
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip().lower(), val.strip()
        if not eq:
            raise ScenarioError(f"{where}: expected key=value, got {line!r}")
        if key not in SCHEMA:
            raise ScenarioError(f"{where}: unknown key {key!r}")
        home, parser = SCHEMA[key]
        if section is not None and section != home:
            raise ScenarioError(f"{where}: key {key!r} belongs in [{home}], not [{section}]")
        if key in values:
            raise ScenarioError(f"{where}: duplicate key {key!r}")
        try:
            values[key] = parser(val)
        except ValueError as e:
            raise ScenarioError(f"{where}: invalid value for {key!r}: {e}") from None
        lines[key] = where
    if "seed" not in values:
        raise ScenarioError(f"{source}: missing mandatory key 'seed'")
    return build_config(values, lines)


def build_config(values: dict, lines: Optional[dict] = None) -> ScenarioConfig:
    lines = lines or {}

    def fail(keys, msg):
        where = next((lines[k] for k in keys if k in lines), "<scenario>")
        raise ScenarioError(f"{where}: {msg}")

    base = {k: v for k, v in values.items() if SCHEMA[k][0] in ("scenario", "network", "traffic")}
    game_kw = {_GAME_FIELD.get(k, k): values[k] for k in ("alpha", "beta", "delta", "lambda", "c", "f") if k in values}
    try:
        params = dataclasses.replace(DEFAULT_PARAMS, **game_kw)
    except GameParamError as e:
        fail([k for k in ("alpha", "beta", "delta", "lambda", "c", "f") if k in values], str(e))
    w_kw = {k: values[k] for k in ("f1", "f2", "f3") if k in values}
    try:
        weights = dataclasses.replace(BeliefWeights(), **w_kw)
    except ConfigurationError as e:
        fail(list(w_kw), str(e))
    cfg = ScenarioConfig(params=params, weights=weights, **base)

    att_keys = [k for k in values if SCHEMA[k][0] == "attacker"]
    label = values.get("attacker")
    if label is not None and label.lower() == "none":
        if len(att_keys) > 1:
            fail(att_keys, "attacker=none conflicts with other attacker keys")
        return cfg
    if label is None and not att_keys:
        return cfg
    kw = dict(n_clients=cfg.n_clients, rate=values.get("bot_rate", cfg.client_rate), pkt_size=cfg.pkt_size)
    if label is not None:
        cap, _, beh = label.lower().partition("-")
        try:
            kw["capability"], kw["behavior"] = Capability(cap), Behavior(beh)
        except ValueError:
            fail(["attacker"], f"attacker must be none or <decent|strong>-<stealthy|aggressive>, got {label!r}")
    for k in ("behavior", "capability", "recon_duration", "target_links", "probe_interval"):
        if k in values:
            kw[k] = values[k]
    if kw["rate"] > cfg.client_rate:
        fail(["bot_rate"], f"bot_rate {kw['rate']} exceeds client_rate {cfg.client_rate}")
    att = AttackerConfig(**kw)
    if cfg.duration <= att.recon_duration:
        fail(["duration", "recon_duration"], "duration must exceed the attacker's recon_duration")
    return cfg.with_(attacker=att)


def parse_scenario(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from None
    return parse_scenario_text(text, str(path))


def format_defaults() -> str:
    d = ScenarioConfig(seed=1)
    p, w = d.params, d.weights
    return "\n".join([
        "# defaults applied to any key a scenario leaves out",
        "[scenario]",
        "seed = <required>",
        f"scenario_id = {d.scenario_id}",
        f"strategy = {d.strategy}",
        f"duration = {d.duration:g}",
        f"drain = {d.drain:g}",
        f"bucket_width = {d.bucket_width:g}",
        "[network]",
        f"topology = {d.topology}",
        f"link_capacity_bps = {d.link_capacity_bps:g}",
        f"prop_delay_us = {d.prop_delay_us}",
        f"queue_pkts = {d.queue_pkts}",
        f"update_duration_us = {d.update_duration_us}",
        f"mutation_mode = {d.mutation_mode.value}",
        f"k_paths = {d.k_paths}",
        "[traffic]",
        f"n_clients = {d.n_clients}",
        f"client_rate = {d.client_rate:g}",
        f"pkt_size = {d.pkt_size}",
        f"jitter = {str(d.jitter).lower()}",
        "[attacker]",
        "attacker = none            # or strong-aggressive, decent-stealthy, ...",
        f"recon_duration = {AttackerConfig().recon_duration:g}",
        f"target_links = {AttackerConfig().target_links}",
        f"probe_interval = {AttackerConfig().probe_interval:g}",
        "bot_rate = <client_rate>",
        "[game]",
        f"alpha = {p.alpha:g}", f"beta = {p.beta:g}", f"delta = {p.delta:g}",
        f"lambda = {p.lam:g}", f"c = {p.c:g}", f"f = {p.f:g}",
        f"f1 = {w.f1:g}", f"f2 = {w.f2:g}", f"f3 = {w.f3:g}",
    ]) + "\n"
