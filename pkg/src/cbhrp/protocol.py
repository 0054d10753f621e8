"""Head-set cluster protocol: election, head-set selection and epoch rotation.

A round is a sequence of iterations. Each iteration elects ``k`` cluster heads,
lets every alive node join its nearest head, and has each head pick the
``m - 1`` nearest eligible members as associates. The head-set then rotates
the head role through ``epochs`` epochs, one frame to the base station per
member per epoch. LEACH is the ``m = 1`` case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .fsm import StateEvent, transition
from .model import (
    IterationReport,
    NetworkConfig,
    Node,
    NodeState,
    RoundReport,
)
from .radio import aggregate_energy, charge, quantize, rx_energy, tx_energy

if TYPE_CHECKING:
    from .sim import World

# advertisement, acknowledgment and schedule phases take one slot each
ELECTION_SLOTS = 3


class ElectionInfeasible(RuntimeError):
    """Fewer eligible candidates than cluster heads requested."""


@dataclass
class HeadSet:
    cluster: int
    members: list[int]
    active_index: int = 0

    @property
    def active(self) -> int:
        return self.members[self.active_index]


def leach_config(config: NetworkConfig) -> NetworkConfig:
    """The LEACH baseline: one head per cluster, one head per iteration."""
    return replace(config, m=1)


def elect_cluster_heads(candidates: Iterable[int], k: int, rng: np.random.Generator) -> list[int]:
    """Draw ``k`` distinct heads uniformly without replacement.

    Candidates are sorted first so the draw depends only on the set and the
    generator state.
    """
    pool = sorted(candidates)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(pool) < k:
        raise ElectionInfeasible(f"{len(pool)} eligible candidates for {k} cluster heads")
    picks = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in picks]


def _sqdist(a: tuple[float, float], b: tuple[float, float]) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy


def form_clusters(nodes: Iterable[Node], heads: list[int]) -> dict[int, int]:
    """Map each node id to the cluster index of its nearest head.

    Heads own cluster ``heads.index(head)``. Received advertisement strength
    falls with distance squared, so strongest means nearest; equal distances go
    to the head with the lowest id.
    """
    if not heads:
        raise ValueError("at least one head is required")
    nodes = list(nodes)
    by_id = {node.id: node for node in nodes}
    head_index = {h: i for i, h in enumerate(heads)}
    head_pos = [(by_id[h].position, h, i) for i, h in enumerate(heads)]
    assignment = {}
    for node in nodes:
        if node.id in head_index:
            assignment[node.id] = head_index[node.id]
            continue
        _, _, idx = min((_sqdist(node.position, pos), h, i) for pos, h, i in head_pos)
        assignment[node.id] = idx
    return assignment


def select_head_set(members: Iterable[Node], head: int, m: int, cluster: int = 0) -> HeadSet:
    """Head plus the ``m - 1`` members whose acknowledgments arrive strongest.

    ``members`` are the nodes eligible for the head-set (the head included).
    Clusters with fewer than ``m`` eligible members yield a smaller head-set.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    members = list(members)
    head_node = next((n for n in members if n.id == head), None)
    if head_node is None:
        raise ValueError(f"head {head} is not among the cluster members")
    others = sorted(
        (n for n in members if n.id != head),
        key=lambda n: (_sqdist(n.position, head_node.position), n.id),
    )
    return HeadSet(cluster=cluster, members=[head] + [n.id for n in others[: m - 1]])


def iterations_per_round(n_alive: int, k: int, m: int) -> int:
    if k < 1 or m < 1:
        raise ValueError(f"k and m must be >= 1, got k={k}, m={m}")
    return math.ceil(n_alive / (k * m))


def advertisement_range(config: NetworkConfig, k: int) -> float:
    """Radius of a disc with the area of one of ``k`` equal clusters."""
    return config.D / math.sqrt(math.pi * k)


def head_election_energy(config: NetworkConfig, cluster_size: int, k: int) -> float:
    """Election-phase cost borne by a head of a ``cluster_size`` cluster."""
    radio = config.radio
    r_adv = advertisement_range(config, k)
    return (
        tx_energy(config.l_adv, r_adv, radio)
        + k * rx_energy(config.l_adv, radio)
        + (cluster_size - 1) * rx_energy(config.l_ack, radio)
        + tx_energy(config.l_sched, r_adv, radio)
    )


def active_epoch_energy(config: NetworkConfig, cluster_size: int, m_effective: int, d_bs: float) -> float:
    """Cost of one frame for the active member: receive, fuse, forward to the BS."""
    radio = config.radio
    senders = cluster_size - m_effective
    return (
        rx_energy(config.l_data, radio) * senders
        + aggregate_energy(config.l_data, senders + 1, radio)
        + tx_energy(config.l_data, d_bs, radio)
    )


def epochs_per_iteration(
    config: NetworkConfig,
    cluster_size: int,
    m_effective: int,
    d_bs: float,
    k: int | None = None,
) -> int:
    """Epochs a head-set can afford from its per-iteration energy allotment.

    Each member may spend ``beta * e_init`` per iteration; after the head's
    election cost the remainder is divided by the per-epoch cost of the active
    role. At least one epoch is always run.
    """
    if not cluster_size >= m_effective >= 1:
        raise ValueError(f"need cluster_size >= m_effective >= 1, got {cluster_size}, {m_effective}")
    k = config.k if k is None else k
    budget = config.beta * config.e_init - head_election_energy(config, cluster_size, k)
    per_epoch = active_epoch_energy(config, cluster_size, m_effective, d_bs)
    return max(1, math.floor(budget / per_epoch))


def _delta(before: dict[int, float], nodes: list[Node]) -> float:
    total = 0.0
    for i in sorted(before):
        total += before[i] - nodes[i].energy
    return total


def run_epoch(headset: HeadSet, senders: list[Node], world: World) -> tuple[float, int]:
    """Rotate the head role once through ``headset``.

    ``senders`` are the cluster members outside the head-set; each alive one
    sends a data frame to the member currently active. Returns the energy
    spent by all participants and the number of frames delivered to the BS.
    """
    cfg = world.config
    radio = cfg.radio
    nodes = world.nodes
    before = {i: nodes[i].energy for i in headset.members}
    before.update((s.id, s.energy) for s in senders)
    frames = 0
    for idx, mid in enumerate(headset.members):
        member = nodes[mid]
        if not member.alive:
            continue
        headset.active_index = idx
        if member.state is not NodeState.ACTIVE:
            member.state = transition(member.state, StateEvent.TURN_TO_TRANSMIT)
        received = 0
        for s in senders:
            if not s.alive:
                continue
            charge(s, tx_energy(cfg.l_data, s.distance_to(member.position), radio), world.quantum)
            if s.alive:
                received += 1
        cost = (
            rx_energy(cfg.l_data, radio) * received
            + aggregate_energy(cfg.l_data, received + 1, radio)
            + tx_energy(cfg.l_data, member.distance_to(cfg.bs_position), radio)
        )
        charge(member, cost, world.quantum)
        if member.alive:
            member.state = transition(member.state, StateEvent.FRAME_SENT)
            frames += 1
    return _delta(before, nodes), frames


def _epoch_costs(headset: HeadSet, senders: list[Node], world: World) -> dict[int, float]:
    """Per-node charge of one epoch in which nobody dies, on the quantum grid."""
    cfg = world.config
    radio = cfg.radio
    q = world.quantum
    nodes = world.nodes
    costs = {s.id: 0.0 for s in senders}
    for mid in headset.members:
        member = nodes[mid]
        for s in senders:
            costs[s.id] += quantize(tx_energy(cfg.l_data, s.distance_to(member.position), radio), q)
        costs[mid] = quantize(
            rx_energy(cfg.l_data, radio) * len(senders)
            + aggregate_energy(cfg.l_data, len(senders) + 1, radio)
            + tx_energy(cfg.l_data, member.distance_to(cfg.bs_position), radio),
            q,
        )
    return costs


def _run_transfer(headset: HeadSet, senders: list[Node], world: World, epochs: int) -> int:
    """Run ``epochs`` epochs for one cluster; returns frames delivered.

    Epochs in which provably nobody can die are applied in one bulk step.
    """
    nodes = world.nodes
    frames = 0
    done = 0
    while done < epochs:
        _, f = run_epoch(headset, senders, world)
        frames += f
        done += 1
        remaining = epochs - done
        if remaining < 2:
            continue
        participants = [nodes[i] for i in headset.members] + senders
        if not all(p.alive for p in participants):
            continue
        costs = _epoch_costs(headset, senders, world)
        bulk = min(
            (math.floor(nodes[i].energy / c) for i, c in costs.items() if c > 0),
            default=remaining,
        )
        # keep a two-epoch margin so rounding can never hide a death
        bulk = min(bulk - 2, remaining - 1)
        if bulk <= 0:
            continue
        for i, c in costs.items():
            nodes[i].energy -= bulk * c
        frames += bulk * len(headset.members)
        done += bulk
    return frames


def start_round(world: World) -> None:
    """Return every surviving node to the candidate pool."""
    for node in world.nodes:
        if not node.alive:
            continue
        node.state = transition(node.state, StateEvent.ROUND_START)
        node.served_this_round = False


def eligible_candidates(world: World) -> list[int]:
    return [
        n.id
        for n in world.nodes
        if n.state is NodeState.CANDIDATE and not n.served_this_round
    ]


def run_iteration(world: World, rng: np.random.Generator | None = None, k: int | None = None) -> IterationReport:
    """One election phase followed by one data-transfer phase."""
    cfg = world.config
    radio = cfg.radio
    rng = world.rng if rng is None else rng
    k = cfg.k if k is None else k
    nodes = world.nodes

    alive_at_start = [n.id for n in nodes if n.alive]
    heads = elect_cluster_heads(eligible_candidates(world), k, rng)
    for idx, h in enumerate(heads):
        nodes[h].state = transition(nodes[h].state, StateEvent.CHOSEN_AS_HEAD)
        nodes[h].headset_rank = 0
    head_ids = set(heads)

    # -- election phase ------------------------------------------------------
    e0 = {i: nodes[i].energy for i in alive_at_start}
    r_adv = advertisement_range(cfg, k)
    for h in sorted(heads):
        charge(nodes[h], tx_energy(cfg.l_adv, r_adv, radio), world.quantum)
    hear_all = rx_energy(cfg.l_adv, radio) * k
    for i in alive_at_start:
        if nodes[i].alive:
            charge(nodes[i], hear_all, world.quantum)

    assignment = form_clusters((nodes[i] for i in alive_at_start), heads)
    clusters: dict[int, list[Node]] = {idx: [] for idx in range(len(heads))}
    for i in alive_at_start:
        nodes[i].cluster = assignment[i]
        clusters[assignment[i]].append(nodes[i])

    acks = dict.fromkeys(range(len(heads)), 0)
    for i in alive_at_start:
        node = nodes[i]
        if i in head_ids or not node.alive:
            continue
        head = nodes[heads[assignment[i]]]
        charge(node, tx_energy(cfg.l_ack, node.distance_to(head.position), radio), world.quantum)
        if node.alive:
            acks[assignment[i]] += 1

    headsets: list[HeadSet] = []
    for idx, h in enumerate(heads):
        head = nodes[h]
        if not head.alive:
            continue
        charge(head, rx_energy(cfg.l_ack, radio) * acks[idx], world.quantum)
        if not head.alive:
            continue
        eligible = [
            n for n in clusters[idx]
            if n.id == h or (n.alive and n.state is NodeState.CANDIDATE and not n.served_this_round)
        ]
        hs = select_head_set(eligible, h, cfg.m, cluster=idx)
        for rank, mid in enumerate(hs.members[1:], start=1):
            nodes[mid].state = transition(nodes[mid].state, StateEvent.SELECTED_AS_ASSOCIATE)
            nodes[mid].headset_rank = rank
        charge(head, tx_energy(cfg.l_sched, r_adv, radio), world.quantum)
        for mid in hs.members[1:]:
            charge(nodes[mid], rx_energy(cfg.l_sched, radio), world.quantum)
        headsets.append(hs)
    election_energy = _delta(e0, nodes)

    # -- data transfer -------------------------------------------------------
    e1 = {i: nodes[i].energy for i in alive_at_start}
    plans = []
    for hs in headsets:
        if not nodes[hs.members[0]].alive:
            continue
        in_set = set(hs.members)
        alive_members = [n for n in clusters[hs.cluster] if n.alive]
        senders = [n for n in alive_members if n.id not in in_set]
        m_eff = len(hs.members)
        d_bs = nodes[hs.members[0]].distance_to(cfg.bs_position)
        epochs = epochs_per_iteration(cfg, len(senders) + m_eff, m_eff, d_bs, k=k)
        plans.append((hs, senders, epochs, len(senders) + m_eff))

    # all head-sets share one TDMA structure: the tightest budget sets the pace
    epochs = min((p[2] for p in plans), default=0)
    frames = 0
    for hs, senders, _, _ in plans:
        frames += _run_transfer(hs, senders, world, epochs)
    transfer_energy = _delta(e1, nodes)
    slots_per_epoch = max((len(p[0].members) * p[3] for p in plans), default=0)
    elapsed = (ELECTION_SLOTS + epochs * slots_per_epoch) * cfg.t_slot

    served = []
    for hs in headsets:
        served.extend(hs.members)
    for h in heads:
        if h not in served:
            served.append(h)
    for i in served:
        node = nodes[i]
        node.served_this_round = True
        node.headset_rank = None
        if node.alive:
            node.state = transition(node.state, StateEvent.ITERATION_END)
    for i in alive_at_start:
        nodes[i].cluster = None

    return IterationReport(
        election_energy=election_energy,
        transfer_energy=transfer_energy,
        frames_to_bs=frames,
        epochs=epochs,
        elapsed_time=elapsed,
        deaths=[i for i in alive_at_start if not nodes[i].alive],
        served=served,
        clusters=len(plans),
    )


def run_round(world: World, rng: np.random.Generator | None = None) -> RoundReport:
    """Iterate until every surviving node has served in one head-set.

    Nominally that takes ``iterations_per_round`` iterations; uneven clusters
    or deaths can leave stragglers, which are covered by further iterations
    with ``k`` reduced to the number of remaining candidates.
    """
    rng = world.rng if rng is None else rng
    cfg = world.config
    nodes = world.nodes
    start_round(world)
    before = [n.energy for n in nodes]
    iterations = []
    while True:
        eligible = eligible_candidates(world)
        if not eligible:
            break
        iterations.append(run_iteration(world, rng, k=min(cfg.k, len(eligible))))
    round_energy = 0.0
    for i, node in enumerate(nodes):
        round_energy += before[i] - node.energy
    world.round_index += 1
    return RoundReport(
        iterations=iterations,
        round_energy=round_energy,
        alive_after=sum(1 for n in nodes if n.alive),
    )
