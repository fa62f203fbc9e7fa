"""Deterministic discrete-event simulation of the two-layer overlay.

One heap orders every event by ``(time, sequence)``. Cycle ticks fire every
``cycle_length`` time units; a tick applies churn, then lets each live peer run
its protocol step in a seeded shuffled order. Messages are delivered after a
uniform integer delay. Everything random flows from ``SimConfig.seed``, so a
config fully determines the metric stream.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import math
import random
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Callable, Iterator

import numpy as np

from . import transport as tp
from .datasets import Dataset, DatasetConfig, build_dataset
from .dht import DHTConfig, DHTNode, DescriptorRecord, SimHasher, fill_routing_tables, make_record
from .election import ElectionConfig, Elector, centrality_score
from .gossip import GossipConfig, GossipState, ViewEntry, view_quality
from .metrics import PopulationIndex, recall
from .profiles import ParameterError, Profile, similarity
from .query import COMMUNITY, FLOOD, Query, QueryAgent, QueryContext, QueryResult, efficiency_report
from .transport import Message

METRICS_SCHEMA = 1

DELIVER, TICK, TIMER, QUERY, CHURN = "message-delivery", "cycle-tick", "timer", "query-injection", "churn-action"


@dataclass
class ChurnConfig:
    join_rate: float = 0.0
    leave_rate: float = 0.0


@dataclass
class WorkloadConfig:
    n_queries: int = 0
    # None: open queries once representatives have had time to register
    start_cycle: int | None = None
    per_cycle: int = 10
    k: int = 10
    m: int = 3
    ttl: int = 3
    fanout: int = 3
    theta: float = 0.5
    max_probe_radius: int | None = None
    flood_baseline: bool = False
    flood_horizon: int = 20


@dataclass
class SimConfig:
    n_peers: int = 100
    seed: int = 1
    cycles: int = 60
    cycle_length: int = 10
    message_delay: tuple[int, int] = (1, 5)
    churn: ChurnConfig = field(default_factory=ChurnConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    gossip: GossipConfig = field(default_factory=GossipConfig)
    election: ElectionConfig = field(default_factory=ElectionConfig)
    dht: DHTConfig = field(default_factory=DHTConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    # compute mean view quality every N cycles (0 disables it)
    quality_every: int = 1
    # "random": ceil(c_r/2) random peers each; "ring": successor only
    bootstrap: str = "random"

    def __post_init__(self) -> None:
        self.message_delay = tuple(self.message_delay)

    def validate(self) -> None:
        problems = []
        if self.n_peers < 1:
            problems.append("n_peers must be >= 1")
        if self.cycles < 0:
            problems.append("cycles must be >= 0")
        if self.cycle_length < 1:
            problems.append("cycle_length must be >= 1")
        lo, hi = self.message_delay
        if not 0 <= lo <= hi:
            problems.append("message_delay needs 0 <= min <= max")
        if hi >= self.cycle_length:
            problems.append("message_delay max must be below cycle_length")
        if self.churn.join_rate < 0 or self.churn.leave_rate < 0:
            problems.append("churn rates must be >= 0")
        if self.gossip.random_capacity < 1 or self.gossip.similar_capacity < 1:
            problems.append("view capacities must be >= 1")
        if self.dht.k < 1 or self.dht.alpha < 1 or self.dht.sets < 1 or self.dht.bits < 1:
            problems.append("DHT k, alpha, sets and bits must be >= 1")
        if self.dht.probe_radius < 0:
            problems.append("probe_radius must be >= 0")
        if self.dataset.n_labels < 1:
            problems.append("n_labels must be >= 1")
        if self.bootstrap not in ("random", "ring"):
            problems.append(f"unknown bootstrap {self.bootstrap!r}")
        w = self.workload
        if w.n_queries < 0 or w.per_cycle < 1:
            problems.append("workload needs n_queries >= 0 and per_cycle >= 1")
        if problems:
            raise ParameterError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        return _from_dict(cls, data)


def _from_dict(cls, data: dict):
    kwargs = {}
    known = {f.name: f for f in fields(cls)}
    for key, value in data.items():
        if key not in known:
            raise ParameterError(f"unknown config field {cls.__name__}.{key}")
        default = known[key].default_factory() if callable(known[key].default_factory) else None
        if is_dataclass(default) and isinstance(value, dict):
            value = _from_dict(type(default), value)
        kwargs[key] = value
    return cls(**kwargs)


def default_query_start(config: SimConfig) -> int:
    el = config.election
    return el.warmup + el.e_conv + 5


# -- peers ---------------------------------------------------------------------------------


class Peer:
    def __init__(self, sim: "Simulator", pid: int, labels: list[int], profile: Profile, group: int):
        self.sim = sim
        self.pid = pid
        self.labels = labels
        self.profile = profile
        self.group = group
        self.alive = True
        self.rng = random.Random(f"{sim.config.seed}:peer:{pid}")
        cfg = sim.config
        self.gossip = GossipState(pid, profile, cfg.gossip)
        self.elector = Elector(pid, profile, cfg.election, self.centrality, self.similarity_to)
        self.dht = DHTNode(pid, sim, cfg.dht, sim.hasher, clock=lambda: sim.cycle)
        self.queries = QueryAgent(self)
        self.record: DescriptorRecord | None = None
        self.published_at = -1
        self.retired_prior: tuple[int, int] | None = None

    def similarity_to(self, other: int, profile: Profile) -> float:
        return self.gossip.score_of(other, profile)

    def centrality(self) -> float:
        return centrality_score([self.similarity_to(e.peer, e.profile) for e in self.gossip.similar_view])

    # -- cycle step ------------------------------------------------------------------

    def on_cycle(self, cycle: int) -> None:
        sim = self.sim
        g = self.gossip
        g.tick()
        self.elector.on_cycle(cycle)
        g.community = self.elector.community
        # rank before the shuffle takes its partner out of the random view
        g.merge_similar()
        shuffle = g.random_shuffle_step(self.rng)
        if shuffle is not None:
            partner, entries = shuffle
            sim.send(Message(tp.SHUFFLE_REQ, self.pid, partner, entries))
        step = g.similar_select_step()
        if step is not None:
            partner, entries = step
            sim.send(Message(tp.SIM_REQ, self.pid, partner, (entries, self.elector.outgoing())))
        self.dht.expire(cycle)
        self.queries.expire(cycle)
        self.maintain_registration(cycle)

    def maintain_registration(self, cycle: int) -> None:
        """Publish, republish or retire this peer's descriptor in the DHT."""
        el = self.elector
        cfg = self.sim.config
        if not el.active:
            return
        if el.is_representative() and el.epoch_age(cycle) >= cfg.election.e_conv:
            st = el.state
            stale = self.record is None or not self.record.active or self.record.epoch != st.epoch
            if stale or cycle - self.published_at >= cfg.dht.t_repub:
                self.record = make_record(self.pid, self.profile, self.sim.hasher, st.epoch, cycle)
                self.published_at = cycle
                self.dht.register(self.record, self.sim.on_registered)
            if st.prior is not None and st.prior != self.pid and self.retired_prior != (st.prior, st.epoch):
                # retire the representative we replaced, in case it is gone for good
                tomb = make_record(st.prior, st.prior_profile, self.sim.hasher, st.epoch, cycle, active=False)
                self.retired_prior = (st.prior, st.epoch)
                self.dht.register(tomb, self.sim.on_registered)
        elif self.record is not None and self.record.active and not el.is_representative():
            epoch = max(self.record.epoch, el.state.epoch if el.state else 0)
            self.record = make_record(self.pid, self.profile, self.sim.hasher, epoch, cycle, active=False)
            self.published_at = cycle
            self.dht.register(self.record, self.sim.on_registered)

    # -- message dispatch ------------------------------------------------------------

    def receive(self, msg: Message) -> None:
        kind = msg.kind
        g = self.gossip
        if kind == tp.SHUFFLE_REQ:
            reply = g.handle_shuffle_request(msg.src, msg.body, self.rng)
            self.sim.send(Message(tp.SHUFFLE_REP, self.pid, msg.src, reply))
        elif kind == tp.SHUFFLE_REP:
            g.handle_shuffle_reply(msg.src, msg.body)
        elif kind == tp.SIM_REQ:
            entries, election = msg.body
            reply = g.handle_similar_request(msg.src, entries)
            if election is not None:
                self.elector.election_step([election], self.sim.cycle)
                g.community = self.elector.community
            self.sim.send(Message(tp.SIM_REP, self.pid, msg.src, (reply, self.elector.outgoing())))
        elif kind == tp.SIM_REP:
            entries, election = msg.body
            g.handle_similar_reply(msg.src, entries)
            if election is not None:
                self.elector.election_step([election], self.sim.cycle)
                g.community = self.elector.community
        elif kind in (tp.QUERY_FWD, tp.QUERY_HIT):
            self.queries.receive(msg)
        else:
            self.dht.receive(msg)

    def is_representative(self) -> bool:
        return self.elector.is_representative()


# -- per-query bus accounting --------------------------------------------------------------


@dataclass
class QueryStats:
    messages: int = 0
    comparisons: int = 0
    # peer -> score, in evaluation order
    evaluated: dict[int, float] = field(default_factory=dict)


@dataclass
class MetricsFrame:
    cycle: int
    alive: int
    mean_view_quality: float | None
    n_representatives: int
    n_communities: int
    n_communities_oracle: int
    dht_representatives: int
    sent: int
    delivered: int
    dropped: int
    messages: dict[str, int]
    queries: list[dict]

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["schema"] = METRICS_SCHEMA
        return rec


class Simulator:
    """Owns all peers and the event heap; implements the transport contract for them."""

    def __init__(self, config: SimConfig, dataset: Dataset | None = None):
        config.validate()
        self.config = config
        self.rng = random.Random(f"{config.seed}:sim")
        self.churn_rng = np.random.default_rng([config.seed, 17])
        self.query_rng = np.random.default_rng([config.seed, 29])
        self.dataset = dataset or build_dataset(config.dataset, config.n_peers, config.seed)
        self.hasher = SimHasher(
            len(self.dataset.taxonomy), config.dht.bits, config.dht.sets, config.dht.hyperplane_seed
        )
        self.heap: list = []
        self._seq = itertools.count()
        self.time = 0
        self.cycle = 0
        self.peers: dict[int, Peer] = {}
        self.sent = self.delivered = self.dropped = 0
        self.by_kind: dict[str, int] = {k: 0 for k in tp.MESSAGE_KINDS}
        self.frames: list[MetricsFrame] = []
        self.contexts: dict[int, QueryContext] = {}
        self.query_stats: dict[int, QueryStats] = {}
        self.query_inflight: dict[int, int] = {}
        self.completed: list[QueryContext] = []
        self._frame_queries: list[dict] = []
        self.registrations = 0
        self._oracle_cache: tuple[int, dict] | None = None
        self._membership_version = 0
        self.on_frame: Callable[[MetricsFrame], None] | None = None
        self._workload_left = 0
        self._qid_counter = 0
        self._build()

    # -- setup -------------------------------------------------------------------------

    def _build(self) -> None:
        ds = self.dataset
        for pid, (labels, prof, group) in enumerate(zip(ds.labels, ds.profiles, ds.membership)):
            self.peers[pid] = Peer(self, pid, labels, prof, group)
        pids = list(self.peers)
        n = len(pids)
        ell = self.config.gossip.shuffle_length
        for pid in pids:
            if n == 1:
                break
            if self.config.bootstrap == "ring":
                picks = [pids[(pid + 1) % n]]
            else:
                others = [p for p in pids if p != pid]
                picks = self.rng.sample(others, min(ell, len(others)))
            self.peers[pid].gossip.seed_random(self.entry_for(p) for p in picks)
        fill_routing_tables([p.dht for p in self.peers.values()], self.rng)
        self._push(0, TICK, 0)
        w = self.config.workload
        self._workload_left = w.n_queries
        if w.n_queries:
            start = w.start_cycle if w.start_cycle is not None else default_query_start(self.config)
            self._push(start * self.config.cycle_length + 1, QUERY, None)

    def entry_for(self, pid: int) -> ViewEntry:
        p = self.peers[pid]
        return ViewEntry(pid, p.profile, 0, p.elector.community)

    def alive_peers(self) -> list[Peer]:
        return [p for p in self.peers.values() if p.alive]

    # -- transport ------------------------------------------------------------------------

    def now(self) -> int:
        return self.time

    def _push(self, time: int, kind: str, payload: Any) -> None:
        heapq.heappush(self.heap, (time, next(self._seq), kind, payload))

    def send(self, msg: Message) -> None:
        lo, hi = self.config.message_delay
        self.sent += 1
        self.by_kind[msg.kind] += 1
        if msg.qid is not None:
            self._stats(msg.qid).messages += 1
            self.query_inflight[msg.qid] = self.query_inflight.get(msg.qid, 0) + 1
        self._push(self.time + lo + int(self.rng.random() * (hi - lo + 1)), DELIVER, msg)

    def set_timer(self, owner: int, delay: int, callback: Callable[[], None]) -> None:
        self._push(self.time + delay, TIMER, (owner, callback))

    def _stats(self, qid: int) -> QueryStats:
        st = self.query_stats.get(qid)
        if st is None:
            st = self.query_stats[qid] = QueryStats()
        return st

    def count_evaluation(self, qid: int, peer: int, score: float) -> None:
        st = self._stats(qid)
        st.comparisons += 1
        st.evaluated[peer] = score

    def count_comparisons(self, qid: int, n: int) -> None:
        self._stats(qid).comparisons += n

    # -- event loop -------------------------------------------------------------------------

    def step(self) -> bool:
        if not self.heap:
            return False
        time, _seq, kind, payload = heapq.heappop(self.heap)
        self.time = time
        if kind == DELIVER:
            self._deliver(payload)
        elif kind == TICK:
            self._tick(payload)
        elif kind == TIMER:
            owner, callback = payload
            peer = self.peers.get(owner)
            if peer is not None and peer.alive:
                callback()
        elif kind == QUERY:
            self._inject_workload()
        elif kind == CHURN:
            payload()
        return True

    def _deliver(self, msg: Message) -> None:
        dst = self.peers.get(msg.dst)
        if dst is None or not dst.alive:
            self.dropped += 1
            if msg.qid is not None:
                ctx = self.contexts.get(msg.qid)
                if ctx is not None:
                    ctx.on_drop(msg)
        else:
            self.delivered += 1
            dst.receive(msg)
        if msg.qid is not None:
            self.query_inflight[msg.qid] -= 1
            ctx = self.contexts.get(msg.qid)
            if ctx is not None:
                ctx.check_quiescent()

    def _tick(self, cycle: int) -> None:
        if cycle > 0:
            self._emit_frame(cycle - 1)
        self.cycle = cycle
        self.apply_churn()
        order = [p for p in self.peers.values() if p.alive]
        self.rng.shuffle(order)
        for p in order:
            if p.alive:
                p.on_cycle(cycle)
        self._push((cycle + 1) * self.config.cycle_length, TICK, cycle + 1)

    def advance(self, cycles: int) -> None:
        """Run until ``cycles`` more cycles have fully elapsed."""
        self.run_to_cycle(self.cycle + cycles if self.frames or self.time else cycles)

    def run_to_cycle(self, cycle: int) -> None:
        """Process every event strictly before the tick of ``cycle``."""
        limit = cycle * self.config.cycle_length
        while self.heap and (self.heap[0][0] < limit or (self.heap[0][0] == limit and self.heap[0][2] != TICK)):
            self.step()

    def run_until(self, predicate: Callable[[], bool], max_cycles: int = 200) -> None:
        stop = (self.cycle + max_cycles + 1) * self.config.cycle_length
        while not predicate() and self.heap and self.heap[0][0] <= stop:
            self.step()

    def drain(self) -> None:
        """Stop cycling and deliver everything still in flight."""
        ticks = [e for e in self.heap if e[2] == TICK]
        self.heap = [e for e in self.heap if e[2] != TICK]
        heapq.heapify(self.heap)
        while self.heap:
            self.step()
        self._emit_frame(self.cycle)
        for e in ticks:
            heapq.heappush(self.heap, e)

    # -- churn ----------------------------------------------------------------------------

    def apply_churn(self) -> list[tuple[str, int]]:
        ch = self.config.churn
        events: list[tuple[str, int]] = []
        if ch.leave_rate > 0:
            for _ in range(int(self.churn_rng.poisson(ch.leave_rate))):
                alive = [p.pid for p in self.peers.values() if p.alive]
                if len(alive) <= 1:
                    break
                victim = alive[int(self.churn_rng.integers(len(alive)))]
                self.remove_peer(victim)
                events.append(("leave", victim))
        if ch.join_rate > 0:
            for _ in range(int(self.churn_rng.poisson(ch.join_rate))):
                events.append(("join", self.add_peer()))
        return events

    def remove_peer(self, pid: int) -> None:
        peer = self.peers[pid]
        if not peer.alive:
            return
        if sum(p.alive for p in self.peers.values()) <= 1:
            return
        peer.alive = False
        peer.dht.alive = False
        self._membership_version += 1

    def add_peer(self) -> int:
        pid = len(self.peers)
        labels, prof, group = self.dataset.new_peer(self.churn_rng, pid)
        alive = [p.pid for p in self.peers.values() if p.alive]
        peer = Peer(self, pid, labels, prof, group)
        self.peers[pid] = peer
        picks = self.rng.sample(alive, min(self.config.gossip.shuffle_length, len(alive)))
        peer.gossip.seed_random(self.entry_for(p) for p in picks)
        if self.cycle >= self.config.election.warmup:
            peer.elector.start(self.cycle)
        if picks:
            peer.dht.join(picks[0])
        self._membership_version += 1
        return pid

    # -- registration and queries ------------------------------------------------------------

    def on_registered(self, _result) -> None:
        self.registrations += 1

    def inject_query(
        self, q: Query, entry: int, strategy: str = COMMUNITY, representatives: list[int] | None = None
    ) -> QueryContext:
        if q.qid in self.query_stats:
            raise ParameterError(f"query id {q.qid} was already used in this simulation")
        ctx = QueryContext(self, q, entry, strategy)
        self.contexts[q.qid] = ctx
        self._stats(q.qid)
        self.query_inflight.setdefault(q.qid, 0)
        if representatives is not None:
            ctx.phase = "forward"
            ctx.reps = list(representatives)
            ctx.descriptors = [(r, self.peers[r].profile, similarity(q.sample, self.peers[r].profile)) for r in ctx.reps]
            for rep in ctx.reps:
                self.peers[rep].queries.evaluate(q, entry, None, q.ttl, False, rep, ())
            ctx.check_quiescent()
        else:
            ctx.start()
        return ctx

    def on_query_done(self, ctx: QueryContext) -> None:
        self.completed.append(ctx)
        self.contexts.pop(ctx.query.qid, None)
        if getattr(ctx, "record", None) is not None:
            rec = ctx.record
            rec.update(ctx.result.to_record())
            rec["recall"] = recall(ctx.result.match_ids(), rec["oracle"])
            rec["finished_cycle"] = ctx.finished_cycle
            self._frame_queries.append(rec)

    def sample_query(self) -> tuple[Query, int, int]:
        """Perturb a random live peer's labels into a query sample; also pick an entry peer."""
        alive = [p for p in self.peers.values() if p.alive]
        origin = alive[int(self.query_rng.integers(len(alive)))]
        entry = alive[int(self.query_rng.integers(len(alive)))]
        labels = self.dataset.perturb(origin.labels, origin.group, self.query_rng)
        w = self.config.workload
        q = Query(
            self.dataset.expand(labels, origin.group), k=w.k, m=w.m, ttl=w.ttl, fanout=w.fanout, theta=w.theta,
            qid=self._next_qid(), max_probe_radius=w.max_probe_radius,
        )
        return q, entry.pid, origin.pid

    def _next_qid(self) -> int:
        # skip ids taken by queries injected with their own qid
        self._qid_counter += 1
        while self._qid_counter in self.query_stats:
            self._qid_counter += 1
        return self._qid_counter

    def oracle_top_k(self, sample: Profile, k: int) -> list[tuple[int, float]]:
        index = PopulationIndex([(p.pid, p.profile) for p in self.alive_peers()], len(self.dataset.taxonomy))
        return index.top_k(sample, k)

    def _inject_workload(self) -> None:
        w = self.config.workload
        batch = min(w.per_cycle, self._workload_left)
        if batch <= 0:
            return
        index = PopulationIndex([(p.pid, p.profile) for p in self.alive_peers()], len(self.dataset.taxonomy))
        for _ in range(batch):
            q, entry, origin = self.sample_query()
            oracle = index.top_k(q.sample, q.k)
            base = {"cycle": self.cycle, "origin": origin, "oracle": [pid for pid, _ in oracle]}
            ctx = self.inject_query(q, entry, COMMUNITY)
            ctx.record = dict(base)
            if w.flood_baseline:
                fq = Query(q.sample, k=q.k, m=q.m, ttl=q.ttl, fanout=q.fanout, theta=q.theta, qid=self._next_qid())
                fctx = self.inject_query(fq, entry, FLOOD)
                fctx.record = dict(base, paired=q.qid)
        self._workload_left -= batch
        if self._workload_left > 0:
            self._push((self.cycle + 1) * self.config.cycle_length + 1, QUERY, None)

    # -- metrics -------------------------------------------------------------------------------

    def oracle_neighbors(self) -> dict[int, list[tuple[int, float]]]:
        if self._oracle_cache is None or self._oracle_cache[0] != self._membership_version:
            index = PopulationIndex([(p.pid, p.profile) for p in self.alive_peers()], len(self.dataset.taxonomy))
            self._oracle_cache = (self._membership_version, index.all_neighbors(self.config.gossip.similar_capacity))
        return self._oracle_cache[1]

    def mean_view_quality(self) -> float:
        oracle = self.oracle_neighbors()
        alive = self.alive_peers()
        if not alive:
            return 1.0
        return sum(view_quality(p.gossip, oracle[p.pid]) for p in alive) / len(alive)

    def communities_oracle(self) -> int:
        """Components of the similar-view graph restricted to links at or above the adoption threshold."""
        alive = {p.pid: p for p in self.alive_peers()}
        parent = {pid: pid for pid in alive}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tau = self.config.election.tau_adopt
        for p in alive.values():
            for e in p.gossip.similar_view:
                if e.peer in alive and p.similarity_to(e.peer, e.profile) >= tau:
                    a, b = find(p.pid), find(e.peer)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return len({find(x) for x in alive})

    def dht_representatives(self) -> set[int]:
        reps: dict[int, DescriptorRecord] = {}
        for p in self.alive_peers():
            for rec in p.dht.held_records():
                cur = reps.get(rec.representative)
                if cur is None or rec.version > cur.version:
                    reps[rec.representative] = rec
        return {r for r, rec in reps.items() if rec.active}

    def _emit_frame(self, cycle: int) -> None:
        alive = self.alive_peers()
        qe = self.config.quality_every
        quality = self.mean_view_quality() if qe and cycle % qe == 0 else None
        comms = {p.elector.community for p in alive if p.elector.active}
        frame = MetricsFrame(
            cycle=cycle,
            alive=len(alive),
            mean_view_quality=quality,
            n_representatives=sum(p.is_representative() for p in alive),
            n_communities=len(comms),
            n_communities_oracle=self.communities_oracle(),
            dht_representatives=len(self.dht_representatives()),
            sent=self.sent,
            delivered=self.delivered,
            dropped=self.dropped,
            messages=dict(self.by_kind),
            queries=self._frame_queries,
        )
        self._frame_queries = []
        self.frames.append(frame)
        if self.on_frame is not None:
            self.on_frame(frame)

    def check_conservation(self) -> int:
        """sent - delivered - dropped - in flight; zero when every message is accounted for."""
        in_flight = sum(1 for e in self.heap if e[2] == DELIVER)
        return self.sent - self.delivered - self.dropped - in_flight


# -- whole runs -------------------------------------------------------------------------------


def frame_lines(frames: list[MetricsFrame]) -> Iterator[str]:
    for f in frames:
        yield json.dumps(f.to_record(), sort_keys=True)


def run(config: SimConfig, on_frame: Callable[[MetricsFrame], None] | None = None) -> Simulator:
    """Run a whole configuration: ``cycles`` cycles, then drain in-flight traffic."""
    sim = Simulator(config)
    sim.on_frame = on_frame
    sim.run_to_cycle(config.cycles)
    sim.drain()
    return sim


def stream_hash(sim: Simulator) -> str:
    h = hashlib.sha256()
    for line in frame_lines(sim.frames):
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()
