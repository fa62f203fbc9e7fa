from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from atlaas.datasets import DatasetConfig
from atlaas.election import ElectionConfig
from atlaas.metrics import recall
from atlaas.profiles import ParameterError, Profile, similarity
from atlaas.query import Query, community_flood, efficiency_report, resolve, resolve_flood
from atlaas.sim import SimConfig, Simulator


def _converged(n_peers: int, clusters: int, seed: int = 1, **kw) -> Simulator:
    # periodic re-election pushed out of range so queries never straddle an epoch bump
    cfg = SimConfig(
        n_peers=n_peers, seed=seed, dataset=DatasetConfig(n_clusters=clusters),
        election=ElectionConfig(period=1000), **kw,
    )
    sim = Simulator(cfg)
    sim.run_to_cycle(60)
    return sim


@pytest.fixture(scope="module")
def net100():
    return _converged(100, 2, seed=4)


def _rep_of(sim: Simulator, group: int) -> int:
    return next(p.pid for p in sim.peers.values() if p.group == group and p.is_representative())


@pytest.mark.parametrize("kw", [dict(k=0), dict(m=0), dict(fanout=0), dict(ttl=-1), dict(theta=1.5)])
def test_query_validation(kw):
    with pytest.raises(ParameterError):
        Query(Profile({1: 1.0}), **kw)


def test_ttl_one_fanout_two_bounds_evaluation(net100):
    rep = _rep_of(net100, 0)
    ev = community_flood(net100, rep, Query(net100.peers[rep].profile, ttl=1, fanout=2, theta=0.0))
    assert 1 <= len(ev) <= 3


def test_duplicate_query_is_silent(net100):
    rep = _rep_of(net100, 1)
    q = Query(net100.peers[rep].profile, ttl=2, theta=0.0)
    community_flood(net100, rep, q)
    sent = net100.sent
    agent = net100.peers[rep].queries
    agent.evaluate(q, rep, None, q.ttl, False, rep, ())
    assert net100.sent == sent


def test_small_clique_fully_covered():
    sim = _converged(8, 1, seed=1)
    (rep,) = [p.pid for p in sim.peers.values() if p.is_representative()]
    ev = community_flood(sim, rep, Query(sim.peers[0].profile, ttl=3, fanout=3, theta=0.0))
    assert sorted(pid for pid, _ in ev) == list(range(8))


def test_ttl_zero_only_reaches_representatives(net100):
    q = Query(net100.peers[7].profile, ttl=0, theta=0.0, max_probe_radius=3)
    res = resolve(net100, q, entry=3)
    reps = {rep for rep, _, _ in res.community_descriptors}
    assert reps
    assert set(res.match_ids()) <= reps
    assert {pid for pid, _ in res.evaluated} <= reps


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_exact_match_is_reachable(seed):
    sim = _converged(16, 2, seed=seed)
    indexed = sim.dht_representatives()
    for p in sim.peers.values():
        assert p.elector.community in indexed
        res = resolve(sim, Query(p.profile, theta=0.9, max_probe_radius=4), entry=(p.pid * 7) % 16)
        scores = {pid: s for pid, _, s in res.matches}
        assert scores.get(p.pid) == pytest.approx(1.0)


def test_results_are_sound_and_bounded(net100):
    sim = net100
    for i in range(12):
        origin = sim.peers[(i * 13) % 100]
        q = Query(sim.dataset.expand(sim.dataset.perturb(origin.labels, origin.group, sim.query_rng), origin.group),
                  theta=0.3, max_probe_radius=3)
        res = resolve(sim, q, entry=(i * 29) % 100)
        ids = res.match_ids()
        assert len(ids) == len(set(ids)) <= q.k
        keys = [(-s, pid) for pid, _, s in res.matches]
        assert keys == sorted(keys)
        for pid, prof, score in res.matches:
            assert score >= q.theta
            assert score == similarity(sim.peers[pid].profile, q.sample)
            assert prof == sim.peers[pid].profile
        evaluated = [pid for pid, _ in res.evaluated]
        assert len(evaluated) == len(set(evaluated))
        flood_part = q.m * sum(q.fanout**h for h in range(q.ttl + 1))
        assert res.cost.peers_contacted <= flood_part + res.cost.dht_contacts


def test_theta_zero_never_empty(net100):
    for pid in (0, 33, 71):
        q = Query(net100.peers[pid].profile, theta=0.0, max_probe_radius=3)
        assert resolve(net100, q, entry=pid).matches


def test_flood_is_exhaustive_and_dominates(net100):
    sim = net100
    for pid in (5, 50):
        sample = sim.peers[pid].profile
        oracle = sim.oracle_top_k(sample, 10)
        two = resolve(sim, Query(sample, theta=0.0, max_probe_radius=3), entry=pid)
        flood = resolve_flood(sim, Query(sample, theta=0.0), entry=pid)
        assert len(flood.evaluated) == 100
        assert recall(flood.match_ids(), oracle) == 1.0
        assert recall(two.match_ids(), oracle) <= recall(flood.match_ids(), oracle)


def test_identical_strategies_give_unit_ratios(net100):
    q = Query(net100.peers[9].profile, theta=0.0, max_probe_radius=3)
    res = resolve(net100, q, entry=2)
    oracle = net100.oracle_top_k(q.sample, q.k)
    rep = efficiency_report(q, res, res, oracle)
    assert (rep.messages_ratio, rep.comparisons_ratio, rep.peers_contacted_ratio) == (1.0, 1.0, 1.0)
    assert rep.recall == rep.flood_recall


def test_record_schema(net100):
    q = Query(net100.peers[1].profile, theta=0.5, max_probe_radius=3)
    rec = resolve(net100, q, entry=1).to_record()
    assert set(rec) == {"qid", "strategy", "entry", "matches", "descriptors", "cost", "flags"}
    assert set(rec["cost"]) == {"messages", "comparisons", "peers_contacted", "dht_hops", "dht_contacts"}


def test_duplicate_qid_rejected(net100):
    q = Query(net100.peers[1].profile)
    resolve(net100, q, entry=1)
    with pytest.raises(ParameterError):
        resolve(net100, q, entry=2)


@settings(max_examples=15)
@given(st.integers(1, 3), st.integers(0, 3))
def test_flood_size_bound(fanout, ttl):
    sim = _net40()
    rep = _rep_of(sim, 0)
    ev = community_flood(sim, rep, Query(sim.peers[rep].profile, ttl=ttl, fanout=fanout, theta=0.0))
    assert len(ev) <= sum(fanout**h for h in range(ttl + 1))



@lru_cache(maxsize=1)
def _net40() -> Simulator:
    return _converged(40, 2, seed=6)
