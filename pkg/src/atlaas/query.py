"""End-to-end query resolution over both layers.

A query enters at some peer, which searches the DHT for the community
descriptors closest to the sample, then hands the query to the top ``m``
representatives. Each representative evaluates itself and pushes the query
through its similar view, ``fanout`` neighbors per hop for ``ttl`` hops,
staying inside its community where membership is known. Matching peers reply
straight to the entry peer.

The exhaustive flood used as a baseline forwards to every neighbor with no
hop limit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from . import transport as tp
from .metrics import recall
from .profiles import ParameterError, Profile, similarity
from .transport import Message

if TYPE_CHECKING:
    from .dht import SearchResult
    from .sim import Peer, Simulator

_qids = itertools.count(1)

COMMUNITY, FLOOD = "two-layer", "flood"


@dataclass(frozen=True)
class Query:
    sample: Profile
    k: int = 10
    m: int = 3
    ttl: int = 3
    fanout: int = 3
    theta: float = 0.5
    qid: int = field(default_factory=lambda: next(_qids))
    # None means the DHT default; the engine widens up to max_probe_radius when nothing is found
    probe_radius: int | None = None
    max_probe_radius: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1 or self.fanout < 1:
            raise ParameterError("k, m and fanout must be >= 1")
        if self.ttl < 0:
            raise ParameterError("ttl must be >= 0")
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError("theta must lie in [0, 1]")


@dataclass
class QueryCost:
    messages: int = 0
    comparisons: int = 0
    peers_contacted: int = 0
    dht_hops: int = 0
    dht_contacts: int = 0


@dataclass
class QueryResult:
    qid: int
    strategy: str
    entry: int
    matches: list[tuple[int, Profile, float]]
    community_descriptors: list[tuple[int, Profile, float]]
    cost: QueryCost
    flags: list[str] = field(default_factory=list)
    evaluated: list[tuple[int, float]] = field(default_factory=list)

    def match_ids(self) -> list[int]:
        return [pid for pid, _, _ in self.matches]

    def to_record(self) -> dict:
        return {
            "qid": self.qid,
            "strategy": self.strategy,
            "entry": self.entry,
            "matches": [[pid, score] for pid, _, score in self.matches],
            "descriptors": [[rep, score] for rep, _, score in self.community_descriptors],
            "cost": vars(self.cost).copy(),
            "flags": list(self.flags),
        }


class QueryContext:
    """Entry-side state of one in-flight query."""

    def __init__(self, sim: "Simulator", query: Query, entry: int, strategy: str):
        self.sim = sim
        self.query = query
        self.entry = entry
        self.strategy = strategy
        self.hits: dict[int, tuple[Profile, float]] = {}
        self.descriptors: list[tuple[int, Profile, float]] = []
        self.reps: list[int] = []
        self.flags: list[str] = []
        self.radius = query.probe_radius if query.probe_radius is not None else sim.config.dht.probe_radius
        self.max_radius = query.max_probe_radius if query.max_probe_radius is not None else self.radius
        self.search_comparisons = 0
        self.dht_rpcs = 0
        self.dht_contacts: set[int] = set()
        self.phase = "search"
        self.done = False
        self.result: QueryResult | None = None
        self.started_cycle = sim.cycle
        self.finished_cycle: int | None = None

    # -- two-layer path ----------------------------------------------------------

    def start(self) -> None:
        if self.strategy == FLOOD:
            self.phase = "forward"
            self.sim.peers[self.entry].queries.evaluate(self.query, self.entry, None, 0, True, None, ())
            self.check_quiescent()
            return
        self._search()

    def _search(self) -> None:
        node = self.sim.peers[self.entry].dht
        node.search(self.query.sample, self.query.m, self.radius, self._on_search, qid=self.query.qid)

    def _on_search(self, res: "SearchResult") -> None:
        self.search_comparisons += res.candidates
        self.dht_rpcs += res.rpcs
        self.dht_contacts |= res.contacts
        if res.incomplete:
            self.flags.append("dht-incomplete")
        if not res.records and self.radius < self.max_radius:
            self.radius += 1
            self.flags.append(f"widened-radius:{self.radius}")
            self._search()
            return
        self.descriptors = [(r.representative, r.descriptor, s) for r, s in res.ranked()]
        self.reps = [r for r, _, _ in self.descriptors]
        self.phase = "forward"
        if not self.reps:
            self.flags.append("no-representatives")
        q = self.query
        for rep in self.reps:
            if rep == self.entry:
                self.sim.peers[rep].queries.evaluate(q, self.entry, None, q.ttl, False, rep, ())
            else:
                self.sim.send(Message(tp.QUERY_FWD, self.entry, rep, (q, q.ttl, rep, self.entry, False, ()), q.qid))
        self.check_quiescent()

    # -- bookkeeping ---------------------------------------------------------------

    def add_hit(self, peer: int, profile: Profile, score: float) -> None:
        if peer not in self.hits:
            self.hits[peer] = (profile, score)

    def on_drop(self, msg: Message) -> None:
        if msg.kind == tp.QUERY_FWD and msg.src == self.entry and msg.dst in self.reps:
            self.flags.append(f"representative-unreachable:{msg.dst}")

    def check_quiescent(self) -> None:
        if self.done or self.phase != "forward":
            return
        if self.sim.query_inflight.get(self.query.qid, 0):
            return
        self._finish()

    def _finish(self) -> None:
        stats = self.sim.query_stats[self.query.qid]
        ranked = sorted(self.hits.items(), key=lambda t: (-t[1][1], t[0]))[: self.query.k]
        cost = QueryCost(
            messages=stats.messages,
            comparisons=stats.comparisons + self.search_comparisons,
            peers_contacted=len(self.dht_contacts | stats.evaluated.keys()),
            dht_hops=self.dht_rpcs,
            dht_contacts=len(self.dht_contacts),
        )
        self.result = QueryResult(
            self.query.qid,
            self.strategy,
            self.entry,
            [(pid, prof, score) for pid, (prof, score) in ranked],
            self.descriptors,
            cost,
            self.flags,
            list(stats.evaluated.items()),
        )
        self.done = True
        self.finished_cycle = self.sim.cycle
        self.sim.on_query_done(self)


class QueryAgent:
    """Per-peer query handling: evaluation, forwarding and duplicate suppression."""

    def __init__(self, peer: "Peer"):
        self.peer = peer
        # qid -> cycle after which the entry may be forgotten
        self.seen: dict[int, int] = {}

    def receive(self, msg: Message) -> None:
        sim = self.peer.sim
        if msg.kind == tp.QUERY_HIT:
            ctx = sim.contexts.get(msg.qid)
            if ctx is not None:
                peer, profile, score = msg.body
                ctx.add_hit(peer, profile, score)
            return
        q, ttl, community, entry, flood, visited = msg.body
        self.evaluate(q, entry, msg.src, ttl, flood, community, visited)

    def evaluate(
        self,
        q: Query,
        entry: int,
        sender: int | None,
        ttl: int,
        flood: bool,
        community: int | None,
        visited: Sequence[int],
    ) -> None:
        peer = self.peer
        sim = peer.sim
        if q.qid in self.seen:
            return
        horizon = 2 * max(q.ttl, 1) if not flood else 2 * sim.config.workload.flood_horizon
        self.seen[q.qid] = sim.cycle + horizon
        score = similarity(peer.profile, q.sample)
        sim.count_evaluation(q.qid, peer.pid, score)
        if score >= q.theta:
            if entry == peer.pid:
                sim.contexts[q.qid].add_hit(peer.pid, peer.profile, score)
            else:
                sim.send(Message(tp.QUERY_HIT, peer.pid, entry, (peer.pid, peer.profile, score), q.qid))
        if flood:
            for nb in peer.gossip.neighbors():
                if nb != sender:
                    sim.send(Message(tp.QUERY_FWD, peer.pid, nb, (q, 0, None, entry, True, ()), q.qid))
            return
        if ttl <= 0:
            return
        targets = self.pick_forwards(q, community, {peer.pid, *visited} | ({sender} if sender is not None else set()))
        path = tuple(visited) + (peer.pid,) + tuple(targets)
        for nb in targets:
            sim.send(Message(tp.QUERY_FWD, peer.pid, nb, (q, ttl - 1, community, entry, False, path), q.qid))

    def pick_forwards(self, q: Query, community: int | None, exclude: set[int]) -> list[int]:
        """Up to ``fanout`` similar-view neighbors in the community, most query-similar first.

        Neighbors with unknown membership are eligible. Scoring a neighbor's
        cached profile against the sample counts as a comparison.
        """
        peer = self.peer
        pool = [
            e for e in peer.gossip.similar_view
            if e.peer not in exclude and (e.community is None or community is None or e.community == community)
        ]
        if not pool:
            return []
        peer.sim.count_comparisons(q.qid, len(pool))
        pool.sort(key=lambda e: (-similarity(e.profile, q.sample), e.peer))
        return [e.peer for e in pool[: q.fanout]]

    def expire(self, cycle: int) -> None:
        if self.seen:
            self.seen = {q: t for q, t in self.seen.items() if t >= cycle}


# -- synchronous entry points -------------------------------------------------------


def resolve(sim: "Simulator", q: Query, entry: int, max_cycles: int = 200) -> QueryResult:
    """Resolve a query through the DHT and community floods, advancing the simulation as needed."""
    ctx = sim.inject_query(q, entry, COMMUNITY)
    sim.run_until(lambda: ctx.done, max_cycles=max_cycles)
    if not ctx.done:
        raise RuntimeError(f"query {q.qid} did not complete within {max_cycles} cycles")
    return ctx.result


def resolve_flood(sim: "Simulator", q: Query, entry: int, max_cycles: int = 200) -> QueryResult:
    """Exhaustive, hop-unbounded flood from ``entry`` over the whole overlay."""
    ctx = sim.inject_query(q, entry, FLOOD)
    sim.run_until(lambda: ctx.done, max_cycles=max_cycles)
    if not ctx.done:
        raise RuntimeError(f"flood {q.qid} did not complete within {max_cycles} cycles")
    return ctx.result


def community_flood(sim: "Simulator", rep: int, q: Query, max_cycles: int = 200) -> list[tuple[int, float]]:
    """Run only the intra-community phase from ``rep``; returns every evaluated ``(peer, score)``."""
    ctx = sim.inject_query(q, rep, COMMUNITY, representatives=[rep])
    sim.run_until(lambda: ctx.done, max_cycles=max_cycles)
    return ctx.result.evaluated


@dataclass
class EfficiencyReport:
    qid: int
    messages_ratio: float
    comparisons_ratio: float
    peers_contacted_ratio: float
    recall: float
    flood_recall: float

    def to_record(self) -> dict:
        return vars(self).copy()


def _ratio(a: int, b: int) -> float:
    if b == 0:
        return 1.0 if a == 0 else float("inf")
    return a / b


def efficiency_report(
    q: Query, result: QueryResult, flood_baseline: QueryResult, oracle: Sequence[tuple[int, float]]
) -> EfficiencyReport:
    return EfficiencyReport(
        q.qid,
        _ratio(result.cost.messages, flood_baseline.cost.messages),
        _ratio(result.cost.comparisons, flood_baseline.cost.comparisons),
        _ratio(result.cost.peers_contacted, flood_baseline.cost.peers_contacted),
        recall(result.match_ids(), oracle),
        recall(flood_baseline.match_ids(), oracle),
    )
