import math
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cbhrp.protocol as protocol
from cbhrp.model import NetworkConfig, NodeState
from cbhrp.protocol import (
    ElectionInfeasible,
    HeadSet,
    active_epoch_energy,
    elect_cluster_heads,
    epochs_per_iteration,
    form_clusters,
    head_election_energy,
    iterations_per_round,
    leach_config,
    run_epoch,
    run_iteration,
    run_round,
    select_head_set,
    start_round,
)
from cbhrp.radio import energy_quantum
from cbhrp.sim import World, deploy, make_rng

from conftest import make_node


def world_of(nodes, **changes):
    config = replace(NetworkConfig(), n=len(nodes), **changes)
    for node in nodes:
        node.energy = config.e_init
    return World(nodes=nodes, config=config, rng=make_rng(0))


# --- election -----------------------------------------------------------------

def test_forced_single_choice():
    assert elect_cluster_heads({7}, 1, make_rng(3)) == [7]


def test_election_replays_with_seed():
    first = elect_cluster_heads(set(range(1, 401)), 8, make_rng(42))
    again = elect_cluster_heads(set(range(1, 401)), 8, make_rng(42))
    assert first == again
    assert len(set(first)) == 8 and set(first) <= set(range(1, 401))


def test_election_ignores_candidate_order():
    ids = list(range(50))
    a = elect_cluster_heads(ids, 5, make_rng(1))
    b = elect_cluster_heads(reversed(ids), 5, make_rng(1))
    assert a == b


def test_election_infeasible():
    with pytest.raises(ElectionInfeasible):
        elect_cluster_heads({1, 2, 3}, 4, make_rng(0))


def test_election_is_roughly_uniform():
    rng = make_rng(11)
    counts = Counter()
    for _ in range(4000):
        counts.update(elect_cluster_heads(range(10), 3, rng))
    # each id expected 1200 times
    assert all(abs(c - 1200) < 150 for c in counts.values())


# --- clustering ---------------------------------------------------------------

def test_strictly_nearer_head_wins():
    nodes = [make_node(0, 0, 0), make_node(1, 1, 0), make_node(2, 5, 0)]
    assert form_clusters(nodes, [1, 2])[0] == 0


def test_tie_goes_to_lowest_head_id():
    nodes = [make_node(0, 0, 0), make_node(3, 2, 0), make_node(9, -2, 0)]
    assignment = form_clusters(nodes, [9, 3])
    assert assignment[0] == 1  # cluster index of head 3
    assert assignment[3] == 1 and assignment[9] == 0


def test_clusters_match_brute_force_scan():
    rng = np.random.default_rng(5)
    nodes = [make_node(i, *rng.uniform(0, 100, 2)) for i in range(100)]
    heads = [17, 3, 88, 41]
    assignment = form_clusters(nodes, heads)
    for node in nodes:
        best = None
        for idx, h in enumerate(heads):
            d = math.dist(node.position, nodes[h].position)
            if best is None or d < best[0] or (d == best[0] and h < best[1]):
                best = (d, h, idx)
        assert assignment[node.id] == best[2]


# --- head-set selection ---------------------------------------------------------

def test_headset_of_one_is_leach():
    members = [make_node(0, 0, 0), make_node(1, 1, 1)]
    assert select_head_set(members, 0, 1).members == [0]


def test_headset_takes_nearest_members():
    members = [make_node(0, 0, 0)] + [make_node(i, d, 0) for i, d in [(4, 4), (2, 2), (1, 1), (3, 3)]]
    hs = select_head_set(members, 0, 3)
    expected = [0] + [n.id for n in sorted(members[1:], key=lambda n: math.dist(n.position, (0, 0)))][:2]
    assert hs.members == expected == [0, 1, 2]
    assert hs.active_index == 0


def test_headset_clamped_to_cluster():
    hs = select_head_set([make_node(5, 0, 0), make_node(6, 1, 0)], 5, 5)
    assert hs.members == [5, 6]


def test_headset_ties_by_id():
    members = [make_node(0, 0, 0), make_node(8, 1, 0), make_node(2, -1, 0), make_node(5, 0, 1)]
    assert select_head_set(members, 0, 3).members == [0, 2, 5]


# --- scheduling counts --------------------------------------------------------

@pytest.mark.parametrize("n, k, m, expected", [(400, 8, 5, 10), (401, 8, 5, 11), (37, 37, 1, 1)])
def test_iterations_per_round(n, k, m, expected):
    assert iterations_per_round(n, k, m) == expected


@pytest.mark.parametrize("k, m", [(0, 3), (3, 0)])
def test_iterations_per_round_rejects_zero(k, m):
    with pytest.raises(ValueError):
        iterations_per_round(10, k, m)


def test_epochs_floor_clamp():
    config = NetworkConfig()
    e_head = head_election_energy(config, 50, config.k)
    thin = replace(config, beta=(e_head * 1.0001) / config.e_init)
    assert epochs_per_iteration(thin, 50, 5, 100.0) == 1


def test_epochs_match_budget_formula():
    config = replace(NetworkConfig(), beta=0.5)
    budget = 0.5 * config.e_init - head_election_energy(config, 20, config.k)
    per_epoch = active_epoch_energy(config, 20, 5, 100.0)
    # rx + aggregation for 15 senders plus one 4000-bit hop of 100 m
    assert per_epoch == pytest.approx(15 * 2e-4 + 16 * 2e-5 + 6e-4, rel=1e-12)
    assert epochs_per_iteration(config, 20, 5, 100.0) == math.floor(budget / per_epoch)


@given(st.floats(0.01, 10.0), st.integers(1, 60), st.integers(1, 10), st.floats(0, 500))
def test_epochs_monotone_in_initial_energy(e_init, size, m, d_bs):
    m = min(m, size)
    config = replace(NetworkConfig(), e_init=e_init)
    double = replace(config, e_init=2 * e_init)
    assert epochs_per_iteration(double, size, m, d_bs) >= epochs_per_iteration(config, size, m, d_bs)


def test_farther_bs_never_more_epochs():
    config = replace(NetworkConfig(), beta=0.2)
    assert epochs_per_iteration(config, 20, 5, 200.0) <= epochs_per_iteration(config, 20, 5, 100.0)


def test_epochs_reject_bad_sizes():
    with pytest.raises(ValueError):
        epochs_per_iteration(NetworkConfig(), 3, 4, 10.0)


# --- epochs -------------------------------------------------------------------

def _cluster_world(size=3, senders=4):
    nodes = [make_node(i, 10 + i, 10) for i in range(size + senders)]
    world = world_of(nodes, k=1, m=size, D=50.0, bs_position=(25.0, 100.0))
    members = list(range(size))
    for rank, i in enumerate(members):
        nodes[i].state = NodeState.ACTIVE if rank == 0 else NodeState.ASSOCIATE
        nodes[i].headset_rank = rank
    return world, HeadSet(cluster=0, members=members), nodes[size:]


def test_epoch_single_member():
    world, hs, senders = _cluster_world(size=1)
    _, frames = run_epoch(hs, senders, world)
    assert frames == 1
    assert world.nodes[0].state is NodeState.PASSIVE_ASSOCIATE


def test_epoch_each_member_active_once(monkeypatch):
    world, hs, senders = _cluster_world(size=3)
    turns = []
    original = protocol.transition

    def spy(state, event):
        new = original(state, event)
        if new is NodeState.ACTIVE:
            turns.append(hs.members[hs.active_index])
        return new

    monkeypatch.setattr(protocol, "transition", spy)
    _, frames = run_epoch(hs, senders, world)
    assert frames == 3
    # the head enters the epoch already active
    assert turns == [1, 2]
    assert [world.nodes[i].state for i in hs.members] == [NodeState.PASSIVE_ASSOCIATE] * 3


def test_exactly_one_active_whenever_energy_moves(monkeypatch):
    world, hs, senders = _cluster_world(size=4, senders=6)
    original = protocol.charge

    def checked(node, amount, quantum=None):
        active = [i for i in hs.members if world.nodes[i].state is NodeState.ACTIVE]
        assert len(active) == 1
        return original(node, amount, quantum)

    monkeypatch.setattr(protocol, "charge", checked)
    for _ in range(3):
        run_epoch(hs, senders, world)
    assert not any(world.nodes[i].state is NodeState.ASSOCIATE for i in hs.members)


def test_epoch_energy_equals_node_deltas():
    world, hs, senders = _cluster_world(size=3, senders=5)
    before = [n.energy for n in world.nodes]
    energy, _ = run_epoch(hs, senders, world)
    total = 0.0
    for b, n in zip(before, world.nodes):
        total += b - n.energy
    assert energy == total > 0


def test_epoch_skips_member_that_dies():
    world, hs, senders = _cluster_world(size=3, senders=2)
    world.nodes[1].energy = 1e-9
    _, frames = run_epoch(hs, senders, world)
    assert frames == 2
    assert world.nodes[1].state is NodeState.DEAD
    assert world.nodes[2].state is NodeState.PASSIVE_ASSOCIATE


# --- iterations and rounds ----------------------------------------------------

def test_minimal_world_iteration():
    world = world_of([make_node(0, 3, 4)], k=1, m=1, D=10.0, bs_position=(5.0, 20.0))
    report = run_iteration(world)
    assert report.frames_to_bs == report.epochs >= 1
    assert report.served == [0]
    assert world.nodes[0].state is NodeState.NON_CANDIDATE


def test_iteration_replays_bit_for_bit(small_config):
    a = run_iteration(deploy(small_config, 9))
    b = run_iteration(deploy(small_config, 9))
    assert a == b


def test_headset_members_become_non_candidates(small_config):
    world = deploy(small_config, 4)
    report = run_iteration(world)
    assert report.served
    for i in report.served:
        node = world.nodes[i]
        assert node.state is NodeState.NON_CANDIDATE and node.served_this_round
        assert node.headset_rank is None
    world.validate()


def test_iteration_frames_match_epochs_without_deaths(small_config):
    world = deploy(replace(small_config, beta=0.2), 2)
    report = run_iteration(world)
    assert not report.deaths
    assert report.frames_to_bs == report.epochs * report.clusters * small_config.m


def test_iteration_time_formula():
    world = world_of([make_node(0, 1, 1), make_node(1, 2, 2)], k=1, m=2, D=10.0, t_slot=0.002)
    report = run_iteration(world)
    assert report.elapsed_time == pytest.approx((3 + report.epochs * 2 * 2) * 0.002, rel=1e-12)


def test_election_infeasible_propagates(small_config):
    world = deploy(small_config, 1)
    for node in world.nodes[2:]:
        node.state = NodeState.NON_CANDIDATE
    with pytest.raises(ElectionInfeasible):
        run_iteration(world, k=3)


def test_one_iteration_when_everyone_fits():
    # k = 1 and m = n: the single cluster's head-set is the whole network
    config = replace(NetworkConfig(), n=12, k=1, m=12, D=20.0)
    assert len(run_round(deploy(config, 3)).iterations) == 1
    config = replace(NetworkConfig(), n=12, k=12, m=1, D=20.0)
    assert len(run_round(deploy(config, 3)).iterations) == 1


def test_round_serves_everyone_once(small_config):
    world = deploy(replace(small_config, e_init=1e3), 6)
    report = run_round(world)
    served = [i for it in report.iterations for i in it.served]
    assert sorted(served) == list(range(small_config.n))
    assert len(report.iterations) >= iterations_per_round(small_config.n, small_config.k, small_config.m)


def test_round_energy_equals_iteration_and_node_sums(small_config):
    world = deploy(small_config, 8)
    before = [n.energy for n in world.nodes]
    report = run_round(world)
    by_node = 0.0
    for b, n in zip(before, world.nodes):
        by_node += b - n.energy
    assert report.round_energy == by_node
    assert report.round_energy == sum(it.energy for it in report.iterations)


def test_second_round_resets_candidates(small_config):
    world = deploy(small_config, 8)
    run_round(world)
    start_round(world)
    assert all(n.state is NodeState.CANDIDATE and not n.served_this_round for n in world.nodes if n.alive)


def test_leach_is_m1(small_config):
    assert leach_config(small_config).m == 1
    assert leach_config(small_config).k == small_config.k


@given(st.integers(0, 200))
@settings(max_examples=15, deadline=None)
def test_frames_non_decreasing_in_headset_size(seed):
    config = replace(NetworkConfig(), n=120, k=4, D=60.0, beta=0.05)
    frames = []
    for m in range(1, 7):
        world = deploy(replace(config, m=m), seed)
        start_round(world)
        frames.append(run_iteration(world).frames_to_bs)
    assert frames == sorted(frames)


def test_quantum_is_set_from_config(small_config):
    world = deploy(small_config, 1)
    assert world.quantum == energy_quantum(small_config.n * small_config.e_init)
