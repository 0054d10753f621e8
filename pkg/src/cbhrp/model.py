"""Domain types shared by the radio model, protocol engine, simulator and sweeps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    """Invalid or unparsable network configuration.

    ``fields`` names the offending configuration keys, ``line`` is the 1-based
    line number in a config file when the error came from parsing one.
    """

    def __init__(self, message: str, fields: list[str] | None = None, line: int | None = None):
        self.fields = list(fields or [])
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantError(AssertionError):
    """A node or world violates one of its structural invariants."""


class NodeState(enum.Enum):
    CANDIDATE = "candidate"
    NON_CANDIDATE = "non_candidate"
    ACTIVE = "active"
    ASSOCIATE = "associate"
    PASSIVE_ASSOCIATE = "passive_associate"
    DEAD = "dead"


HEADSET_STATES = frozenset(
    {NodeState.ACTIVE, NodeState.ASSOCIATE, NodeState.PASSIVE_ASSOCIATE}
)


@dataclass
class Node:
    id: int
    position: tuple[float, float]
    energy: float
    state: NodeState = NodeState.CANDIDATE
    cluster: int | None = None
    headset_rank: int | None = None
    served_this_round: bool = False

    @property
    def alive(self) -> bool:
        return self.state is not NodeState.DEAD

    def distance_to(self, point: tuple[float, float]) -> float:
        return math.hypot(self.position[0] - point[0], self.position[1] - point[1])


def check_node(node: Node, D: float) -> None:
    """Raise InvariantError if ``node`` breaks any of the Node invariants."""
    if node.energy < 0:
        raise InvariantError(f"node {node.id}: negative energy {node.energy}")
    if node.energy == 0 and node.state is not NodeState.DEAD:
        raise InvariantError(f"node {node.id}: zero energy but state {node.state.name}")
    in_headset = node.state in HEADSET_STATES
    if in_headset != (node.headset_rank is not None):
        raise InvariantError(
            f"node {node.id}: headset_rank={node.headset_rank} with state {node.state.name}"
        )
    x, y = node.position
    if not (0.0 <= x <= D and 0.0 <= y <= D):
        raise InvariantError(f"node {node.id}: position {node.position} outside field")


@dataclass(frozen=True)
class RadioParams:
    """First-order radio model constants.

    Defaults are the usual LEACH-literature values: 50 nJ/bit electronics,
    10 pJ/bit/m^2 free-space amplifier, 5 nJ/bit/signal aggregation.
    """

    e_elec: float = 50e-9
    eps_amp: float = 10e-12
    e_da: float = 5e-9
    path_loss_exponent: int = 2

    def problems(self) -> list[str]:
        bad = [
            f"radio.{name}"
            for name in ("e_elec", "eps_amp", "e_da")
            if not getattr(self, name) > 0
        ]
        if self.path_loss_exponent != 2:
            bad.append("radio.path_loss_exponent")
        return bad


@dataclass(frozen=True)
class NetworkConfig:
    n: int = 400
    k: int = 8
    m: int = 5
    D: float = 100.0
    bs_position: tuple[float, float] = (50.0, 150.0)
    e_init: float = 0.5
    radio: RadioParams = field(default_factory=RadioParams)
    l_adv: int = 200
    l_ack: int = 200
    l_sched: int = 200
    l_data: int = 4000
    beta: float = 0.02
    t_slot: float = 1e-3
    seed: int = 1

    def problems(self) -> list[str]:
        """Names of the fields that violate the config invariants."""
        bad = []
        if self.n < 1:
            bad.append("n")
        if self.k < 1 or self.k > max(self.n, 1):
            bad.append("k")
        if self.m < 1 or (self.k >= 1 and self.m > self.n // self.k):
            bad.append("m")
        if not self.D > 0:
            bad.append("D")
        if not self.e_init > 0:
            bad.append("e_init")
        if not 0 < self.beta <= 1:
            bad.append("beta")
        for name in ("l_adv", "l_ack", "l_sched", "l_data"):
            if getattr(self, name) <= 0:
                bad.append(name)
        if not self.t_slot > 0:
            bad.append("t_slot")
        if not all(math.isfinite(c) for c in self.bs_position):
            bad.append("bs_position")
        return bad + self.radio.problems()

    def validate(self) -> NetworkConfig:
        bad = self.problems()
        if bad:
            raise ConfigError("invalid value for " + ", ".join(bad), fields=bad)
        return self

    @property
    def field_center(self) -> tuple[float, float]:
        return (self.D / 2, self.D / 2)

    def with_bs_distance(self, distance: float) -> NetworkConfig:
        """Copy with the base station ``distance`` metres above the field center."""
        cx, cy = self.field_center
        return replace(self, bs_position=(cx, cy + distance))


@dataclass
class IterationReport:
    election_energy: float
    transfer_energy: float
    frames_to_bs: int
    epochs: int
    elapsed_time: float
    deaths: list[int]
    # ids of every head-set member of this iteration, in cluster then rotation order
    served: list[int] = field(default_factory=list)
    clusters: int = 0

    @property
    def energy(self) -> float:
        return self.election_energy + self.transfer_energy


@dataclass
class RoundReport:
    iterations: list[IterationReport]
    round_energy: float
    alive_after: int

    @property
    def deaths(self) -> list[int]:
        return [d for it in self.iterations for d in it.deaths]


@dataclass
class SimulationTrace:
    rounds: list[RoundReport] = field(default_factory=list)
    fnd: int | None = None
    hnd: int | None = None
    lnd: int | None = None
    n: int = 0
    generator: str = ""

    @property
    def total_energy(self) -> float:
        return sum(r.round_energy for r in self.rounds)


# --- config file (flat ``key = value`` text) ---------------------------------

_RADIO_KEYS = {f"radio.{f.name}": f.name for f in fields(RadioParams)}
_INT_KEYS = {"n", "k", "m", "l_adv", "l_ack", "l_sched", "l_data", "seed"}
_FLOAT_KEYS = {"D", "e_init", "beta", "t_slot"}


def _parse_value(key: str, raw: str):
    if key == "bs_position":
        parts = [p for p in raw.replace("(", " ").replace(")", " ").replace(",", " ").split()]
        if len(parts) != 2:
            raise ValueError("expected two coordinates 'x, y'")
        return (float(parts[0]), float(parts[1]))
    if key in _INT_KEYS or key == "radio.path_loss_exponent":
        return int(raw)
    return float(raw)


def parse_config(text: str) -> NetworkConfig:
    """Parse ``key = value`` lines into a validated NetworkConfig.

    Blank lines and ``#`` comments are ignored; omitted keys keep their defaults.
    """
    top: dict = {}
    radio: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        known = key in _INT_KEYS or key in _FLOAT_KEYS or key == "bs_position" or key in _RADIO_KEYS
        if not known:
            raise ConfigError(f"unknown key {key!r}", fields=[key], line=lineno)
        try:
            value = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", fields=[key], line=lineno) from None
        if key in _RADIO_KEYS:
            radio[_RADIO_KEYS[key]] = value
        else:
            top[key] = value
    config = NetworkConfig(**top, radio=RadioParams(**radio))
    return config.validate()


def format_config(config: NetworkConfig) -> str:
    lines = []
    for f in fields(NetworkConfig):
        value = getattr(config, f.name)
        if f.name == "radio":
            for rf in fields(RadioParams):
                lines.append(f"radio.{rf.name} = {getattr(value, rf.name)!r}")
        elif f.name == "bs_position":
            lines.append(f"bs_position = {value[0]!r}, {value[1]!r}")
        else:
            lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> NetworkConfig:
    return parse_config(Path(path).read_text())


def save_config(config: NetworkConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(config))
