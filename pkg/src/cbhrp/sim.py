"""World construction, the round loop and lifetime landmarks."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .model import (
    InvariantError,
    NetworkConfig,
    Node,
    SimulationTrace,
    check_node,
)
from .protocol import run_round
from .radio import energy_quantum, quantize

GENERATOR = "numpy.random.PCG64"

TRACE_HEADER = [
    "round",
    "iteration",
    "election_energy_j",
    "transfer_energy_j",
    "frames_to_bs",
    "epochs",
    "elapsed_time_s",
    "alive_after",
]


@dataclass
class World:
    nodes: list[Node]
    config: NetworkConfig
    rng: np.random.Generator
    round_index: int = 0
    # all charges are whole multiples of this many joules
    quantum: float = 0.0

    def __post_init__(self):
        if not self.quantum:
            self.quantum = energy_quantum(self.config.n * self.config.e_init)

    @property
    def alive(self) -> list[Node]:
        return [n for n in self.nodes if n.alive]

    def validate(self) -> None:
        if len(self.nodes) != self.config.n:
            raise InvariantError(f"{len(self.nodes)} nodes for n={self.config.n}")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise InvariantError(f"node at index {i} has id {node.id}")
            check_node(node, self.config.D)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def deploy(config: NetworkConfig, seed: int | None = None) -> World:
    """Scatter ``config.n`` fresh candidates uniformly over the D x D field."""
    config.validate()
    rng = make_rng(config.seed if seed is None else seed)
    xy = rng.uniform(0.0, config.D, size=(config.n, 2))
    quantum = energy_quantum(config.n * config.e_init)
    e_init = quantize(config.e_init, quantum)
    nodes = [
        Node(id=i, position=(float(x), float(y)), energy=e_init)
        for i, (x, y) in enumerate(xy)
    ]
    return World(nodes=nodes, config=config, rng=rng, quantum=quantum)


class StopKind(enum.Enum):
    FIRST_DEATH = "first-death"
    HALF_DEAD = "half-dead"
    ALL_DEAD = "all-dead"
    MAX_ROUNDS = "max-rounds"


@dataclass(frozen=True)
class Stop:
    kind: StopKind
    rounds: int | None = None

    @classmethod
    def parse(cls, text: str) -> Stop:
        """Parse ``first-death``, ``half-dead``, ``all-dead`` or ``max-rounds:N``."""
        name, _, arg = text.strip().lower().partition(":")
        kind = StopKind(name)
        if kind is StopKind.MAX_ROUNDS:
            rounds = int(arg)
            if rounds < 0:
                raise ValueError("max-rounds must be >= 0")
            return cls(kind, rounds)
        if arg:
            raise ValueError(f"{name} takes no argument")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is StopKind.MAX_ROUNDS:
            return f"{self.kind.value}:{self.rounds}"
        return self.kind.value


FIRST_DEATH = Stop(StopKind.FIRST_DEATH)
HALF_DEAD = Stop(StopKind.HALF_DEAD)
ALL_DEAD = Stop(StopKind.ALL_DEAD)


def max_rounds(r: int) -> Stop:
    return Stop(StopKind.MAX_ROUNDS, r)


def half_threshold(n: int) -> int:
    return math.ceil(n / 2)


def simulate(config: NetworkConfig, seed: int | None = None, stop: Stop = ALL_DEAD) -> SimulationTrace:
    world = deploy(config, seed)
    trace = SimulationTrace(n=config.n, generator=GENERATOR)
    dead = 0
    while True:
        if stop.kind is StopKind.MAX_ROUNDS and len(trace.rounds) >= stop.rounds:
            break
        if dead == config.n:
            break
        report = run_round(world)
        trace.rounds.append(report)
        r = len(trace.rounds)
        dead = config.n - report.alive_after
        if trace.fnd is None and dead >= 1:
            trace.fnd = r
        if trace.hnd is None and dead >= half_threshold(config.n):
            trace.hnd = r
        if trace.lnd is None and dead == config.n:
            trace.lnd = r
        if stop.kind is StopKind.FIRST_DEATH and trace.fnd is not None:
            break
        if stop.kind is StopKind.HALF_DEAD and trace.hnd is not None:
            break
    return trace


def lifetime_metrics(trace: SimulationTrace) -> tuple[int | None, int | None, int | None]:
    """First, half and last node death rounds (1-based); None if not reached."""
    return trace.fnd, trace.hnd, trace.lnd


def write_trace_csv(trace: SimulationTrace, out: TextIO) -> None:
    """One row per iteration; ``alive_after`` counts survivors after that iteration."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    alive = trace.n
    for r, rnd in enumerate(trace.rounds, start=1):
        for i, it in enumerate(rnd.iterations, start=1):
            alive -= len(it.deaths)
            writer.writerow([
                r,
                i,
                repr(it.election_energy),
                repr(it.transfer_energy),
                it.frames_to_bs,
                it.epochs,
                repr(it.elapsed_time),
                alive,
            ])


def trace_csv(trace: SimulationTrace) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()
