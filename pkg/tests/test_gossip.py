import math
import random
import statistics

import pytest
from hypothesis import given, strategies as st

from atlaas.datasets import DatasetConfig
from atlaas.gossip import GossipConfig, GossipState, ViewEntry, view_quality
from atlaas.profiles import Profile, brute_force_top_k, similarity
from atlaas.sim import SimConfig, Simulator

from strategies import profiles


def _at_cos(c: float) -> Profile:
    """Profile whose cosine with {0: 1} is ``c``."""
    return Profile({0: c, 1: math.sqrt(1 - c * c)})


OWNER = Profile({0: 1.0})


def test_two_peer_exchange():
    rng = random.Random(0)
    pa, pb = Profile({1: 1.0}), Profile({2: 1.0})
    a, b = GossipState(0, pa), GossipState(1, pb)
    a.seed_random([ViewEntry(1, pb, 3)])
    b.seed_random([ViewEntry(0, pa, 3)])
    partner, payload = a.random_shuffle_step(rng)
    assert partner == 1
    reply = b.handle_shuffle_request(0, payload, rng)
    a.handle_shuffle_reply(1, reply)
    assert [(e.peer, e.age) for e in a.random_view] == [(1, 0)]
    assert [(e.peer, e.age) for e in b.random_view] == [(0, 0)]


def test_oldest_entry_is_eviction_candidate():
    cfg = GossipConfig(random_capacity=4)
    g = GossipState(0, OWNER, cfg)
    g.seed_random(ViewEntry(p, Profile({p: 1.0}), 1) for p in range(1, 5))
    g.random_view[2].age = cfg.random_capacity
    assert g.oldest_random().peer == 3
    # a merge into the full view with nothing sent away drops the oldest
    g._merge_random([ViewEntry(9, Profile({9: 1.0}), 0)], set())
    assert {e.peer for e in g.random_view} == {1, 2, 4, 9}


def test_ring_bootstrap_balances_in_degree():
    sim = Simulator(SimConfig(n_peers=100, seed=1, bootstrap="ring"))
    sim.run_to_cycle(50)
    indeg = {pid: 0 for pid in sim.peers}
    for p in sim.peers.values():
        for e in p.gossip.random_view:
            indeg[e.peer] += 1
    counts = list(indeg.values())
    assert statistics.pstdev(counts) / statistics.mean(counts) < 0.35


def test_view_at_true_top_is_fixed_point():
    rnd = random.Random(3)
    pop = [(pid, Profile({rnd.randrange(6): rnd.uniform(0.1, 1), rnd.randrange(6): 1.0})) for pid in range(1, 40)]
    g = GossipState(0, OWNER)
    top = brute_force_top_k(OWNER, pop, g.config.similar_capacity)
    by_id = dict(pop)
    g.similar_view = [ViewEntry(pid, by_id[pid]) for pid, _ in top]
    before = [e.peer for e in g.similar_view]
    g.merge_similar([ViewEntry(pid, prof) for pid, prof in rnd.sample(pop, 15)])
    assert [e.peer for e in g.similar_view] == before


def test_better_peer_replaces_worst():
    cfg = GossipConfig(similar_capacity=3)
    g = GossipState(0, OWNER, cfg)
    g.similar_view = [ViewEntry(1, _at_cos(0.8)), ViewEntry(2, _at_cos(0.6)), ViewEntry(3, _at_cos(0.4))]
    g.merge_similar([ViewEntry(9, _at_cos(0.9))])
    assert [e.peer for e in g.similar_view] == [9, 1, 2]


def test_planted_clusters_separate():
    sim = Simulator(SimConfig(n_peers=200, seed=2, dataset=DatasetConfig(n_clusters=2)))
    sim.run_to_cycle(30)
    pure = 0
    for p in sim.peers.values():
        view = p.gossip.similar_view
        pure += bool(view) and all(sim.peers[e.peer].group == p.group for e in view)
    assert pure / 200 >= 0.95


@pytest.mark.parametrize(
    "have, want",
    [
        (range(10), 1.0),
        (range(10, 20), 0.0),
        (list(range(7)) + [20, 21, 22], 0.7),
    ],
)
def test_view_quality_definition(have, want):
    g = GossipState(0, OWNER)
    g.similar_view = [ViewEntry(p, Profile({p + 1: 1.0})) for p in have]
    oracle = [(p, 1.0) for p in range(10)]
    assert view_quality(g, oracle) == pytest.approx(want)


def test_views_stay_valid_every_cycle():
    sim = Simulator(SimConfig(n_peers=60, seed=4))
    for cycle in range(1, 31):
        sim.run_to_cycle(cycle)
        for p in sim.peers.values():
            p.gossip.check_invariants()
            if cycle >= 2:
                assert p.gossip.random_view


def test_mean_view_quality_rises_by_window():
    windows = []
    for seed in range(1, 6):
        sim = Simulator(SimConfig(n_peers=80, seed=seed))
        sim.run_to_cycle(31)
        q = [f.mean_view_quality for f in sim.frames]
        windows.append([statistics.mean(q[i : i + 5]) for i in range(0, 30, 5)])
    means = [statistics.mean(col) for col in zip(*windows)]
    assert all(b >= a for a, b in zip(means, means[1:]))


@given(
    st.lists(st.tuples(st.integers(1, 60), profiles(), st.integers(0, 50)), max_size=40, unique_by=lambda t: t[0]),
    st.integers(1, 12),
)
def test_merge_similar_keeps_order_and_bounds(entries, cap):
    g = GossipState(0, OWNER, GossipConfig(similar_capacity=cap))
    g.merge_similar([ViewEntry(p, prof, age) for p, prof, age in entries])
    g.check_invariants()
    ages = {e.peer: e.age for e in g.similar_view}
    assert all(a <= g.config.max_similar_age for a in ages.values())
    # nothing left out beats what was kept
    kept = {e.peer for e in g.similar_view}
    if len(kept) == cap:
        worst = min(similarity(OWNER, e.profile) for e in g.similar_view)
        for p, prof, age in entries:
            if p not in kept and age <= g.config.max_similar_age:
                assert similarity(OWNER, prof) <= worst + 1e-12


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 30)), max_size=60), st.integers(1, 10))
def test_random_merge_never_breaks_view(entries, cap):
    g = GossipState(0, OWNER, GossipConfig(random_capacity=cap))
    g._merge_random([ViewEntry(p, Profile({p + 1: 1.0}), a) for p, a in entries], set())
    g.check_invariants()
    assert len(g.random_view) == min(cap, len({p for p, _ in entries} - {0}))
