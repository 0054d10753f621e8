"""Parameter sweeps behind the energy / iteration-time / frame studies.

Every grid point runs ``replicates`` independent simulations from fresh
deployments, seeded ``base_seed + replicate``, and reports mean and
population standard deviation of one metric.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, TextIO

from .model import ConfigError, NetworkConfig
from .protocol import leach_config, run_iteration, run_round, start_round
from .sim import FIRST_DEATH, deploy, simulate

SWEEP_HEADER = [
    "figure", "axis1_name", "axis1", "axis2_name", "axis2",
    "metric", "mean", "stddev", "replicates",
]
COMPARE_HEADER = ["protocol", "energy_per_round", "fnd", "frames_per_iteration"]

DEFAULT_REPLICATES = 20
BS_DISTANCE = "bs_distance"

K_GRID = tuple(range(5, 101, 5))
M_GRID = tuple(range(1, 11))
D_GRID = (50.0, 100.0, 150.0, 200.0, 250.0, 300.0)
BS_GRID = (75.0, 100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 250.0)


class Figure(enum.Enum):
    FIG2 = "fig2"
    FIG3 = "fig3"
    FIG4 = "fig4"
    FIG5 = "fig5"
    FIG6 = "fig6"
    LIFETIME_COMPARE = "lifetime_compare"

    @property
    def metric(self) -> str:
        return _METRICS[self]


_METRICS = {
    Figure.FIG2: "energy_per_round_j",
    Figure.FIG3: "energy_per_round_j",
    Figure.FIG4: "iteration_time_s",
    Figure.FIG5: "iteration_time_s",
    Figure.FIG6: "frames_per_iteration",
    Figure.LIFETIME_COMPARE: "fnd_round",
}

DEFAULT_AXES = {
    Figure.FIG2: (("k", K_GRID), (BS_DISTANCE, BS_GRID)),
    Figure.FIG3: (("D", D_GRID), ("m", M_GRID)),
    Figure.FIG4: (("D", D_GRID), ("m", M_GRID)),
    Figure.FIG5: (("k", K_GRID), ("D", D_GRID)),
    Figure.FIG6: ((BS_DISTANCE, BS_GRID), ("D", D_GRID)),
    Figure.LIFETIME_COMPARE: (("m", M_GRID), ("k", (8,))),
}

_SCALAR_AXES = {"n", "k", "m", "D", "e_init", "l_adv", "l_ack", "l_sched", "l_data", "beta", "t_slot"}
_INT_AXES = {"n", "k", "m", "l_adv", "l_ack", "l_sched", "l_data"}


@dataclass(frozen=True)
class SweepSpec:
    figure: Figure
    base: NetworkConfig
    axis1: tuple[str, tuple]
    axis2: tuple[str, tuple]
    replicates: int = DEFAULT_REPLICATES
    base_seed: int | None = None

    def __post_init__(self):
        for name, _ in (self.axis1, self.axis2):
            if name != BS_DISTANCE and name not in _SCALAR_AXES:
                raise ConfigError(f"cannot sweep over {name!r}", fields=[name])
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1", fields=["replicates"])

    @property
    def seeds(self) -> list[int]:
        start = self.base.seed if self.base_seed is None else self.base_seed
        return [start + r for r in range(self.replicates)]

    def grid(self) -> list[tuple]:
        return [(a, b) for a in self.axis1[1] for b in self.axis2[1]]


def default_spec(figure: Figure | str, base: NetworkConfig | None = None,
                 replicates: int = DEFAULT_REPLICATES, base_seed: int | None = None) -> SweepSpec:
    figure = Figure(figure)
    axis1, axis2 = DEFAULT_AXES[figure]
    return SweepSpec(figure, base or NetworkConfig(), axis1, axis2, replicates, base_seed)


def apply_axes(base: NetworkConfig, settings: Sequence[tuple[str, float]]) -> NetworkConfig:
    """Config at one grid point.

    ``bs_distance`` places the BS that far above the field center and is applied
    after any change of ``D``. A head-set size that no longer fits
    (``m > n // k``) is lowered to ``n // k``.
    """
    config = base
    for name, value in sorted(settings, key=lambda s: s[0] == BS_DISTANCE):
        if name == BS_DISTANCE:
            config = config.with_bs_distance(float(value))
        elif name in _INT_AXES:
            config = replace(config, **{name: int(value)})
        else:
            config = replace(config, **{name: float(value)})
    if config.k >= 1 and config.m > config.n // config.k >= 1:
        config = replace(config, m=config.n // config.k)
    return config.validate()


def measure(figure: Figure, config: NetworkConfig, seed: int) -> float:
    """The figure's metric for one fresh deployment."""
    world = deploy(config, seed)
    if figure in (Figure.FIG2, Figure.FIG3):
        return run_round(world).round_energy
    if figure is Figure.LIFETIME_COMPARE:
        fnd = simulate(config, seed, FIRST_DEATH).fnd
        return math.nan if fnd is None else float(fnd)
    start_round(world)
    report = run_iteration(world, k=config.k)
    if figure is Figure.FIG6:
        return float(report.frames_to_bs)
    return report.elapsed_time


@dataclass(frozen=True)
class SweepRow:
    figure: str
    axis1_name: str
    axis1: float
    axis2_name: str
    axis2: float
    metric: str
    mean: float
    stddev: float
    replicates: int


def _grid_point(args) -> tuple[float, float]:
    figure, config, seeds = args
    values = [measure(figure, config, s) for s in seeds]
    return statistics.fmean(values), statistics.pstdev(values)


def sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Run the grid axis1-major, axis2-minor.

    With ``workers > 1`` grid points run in a process pool; row order and
    values do not depend on the worker count.
    """
    (name1, _), (name2, _) = spec.axis1, spec.axis2
    grid = spec.grid()
    jobs = [
        (spec.figure, apply_axes(spec.base, [(name1, a), (name2, b)]), spec.seeds)
        for a, b in grid
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_grid_point, jobs))
    else:
        stats = [_grid_point(job) for job in jobs]
    return [
        SweepRow(spec.figure.value, name1, a, name2, b, spec.figure.metric, mean, sd, spec.replicates)
        for (a, b), (mean, sd) in zip(grid, stats)
    ]


def _num(value) -> str:
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.9g}"


def write_sweep_csv(rows: Sequence[SweepRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([
            r.figure, r.axis1_name, _num(r.axis1), r.axis2_name, _num(r.axis2),
            r.metric, f"{r.mean:.9g}", f"{r.stddev:.9g}", r.replicates,
        ])


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    return buf.getvalue()


# --- LEACH comparison ---------------------------------------------------------

@dataclass(frozen=True)
class RunSummary:
    """One simulation run to first node death."""

    seed: int
    energy_per_round: float
    fnd: int | None
    frames_per_iteration: float


def summarize_run(config: NetworkConfig, seed: int) -> RunSummary:
    trace = simulate(config, seed, FIRST_DEATH)
    iterations = [it for r in trace.rounds for it in r.iterations]
    return RunSummary(
        seed=seed,
        energy_per_round=statistics.fmean(r.round_energy for r in trace.rounds),
        fnd=trace.fnd,
        frames_per_iteration=statistics.fmean(it.frames_to_bs for it in iterations),
    )


def _summaries(args) -> list[RunSummary]:
    config, seeds = args
    return [summarize_run(config, s) for s in seeds]


def paired_runs(base: NetworkConfig, seeds: Sequence[int], workers: int = 1) -> dict[str, list[RunSummary]]:
    """Per-seed summaries for both arms on identical seeds."""
    arms = {"leach": leach_config(base), "cbhrp": base}
    jobs = [(cfg, list(seeds)) for cfg in arms.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_summaries, jobs))
    else:
        results = [_summaries(job) for job in jobs]
    return dict(zip(arms, results))


@dataclass(frozen=True)
class CompareRow:
    protocol: str
    energy_per_round: float
    fnd: float
    frames_per_iteration: float


def compare_leach(base: NetworkConfig, replicates: int = DEFAULT_REPLICATES,
                  base_seed: int | None = None, workers: int = 1) -> list[CompareRow]:
    """Mean energy per round, first-death round and frames per iteration, LEACH first."""
    start = base.seed if base_seed is None else base_seed
    runs = paired_runs(base, range(start, start + replicates), workers)
    rows = []
    for protocol, summaries in runs.items():
        fnds = [s.fnd for s in summaries if s.fnd is not None]
        rows.append(CompareRow(
            protocol=protocol,
            energy_per_round=statistics.fmean(s.energy_per_round for s in summaries),
            fnd=statistics.fmean(fnds) if fnds else math.nan,
            frames_per_iteration=statistics.fmean(s.frames_per_iteration for s in summaries),
        ))
    return rows


def write_compare_csv(rows: Sequence[CompareRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COMPARE_HEADER)
    for r in rows:
        writer.writerow([
            r.protocol, f"{r.energy_per_round:.9g}", f"{r.fnd:.9g}", f"{r.frames_per_iteration:.9g}",
        ])
