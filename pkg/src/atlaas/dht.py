"""Structured layer: Kademlia routing plus a simhash index over community descriptors.

Lookups are event-driven state machines: a :class:`Lookup` never blocks, it
hands out the next probes to send and digests replies or timeouts. The same
node code runs over the simulator bus or over :class:`LocalTransport` (see
:class:`DHTNetwork`) for synchronous use.

Descriptor records are stored under ``L`` keys, one per simhash signature set.
A search probes every signature within a Hamming radius of the sample's own
signatures and ranks what it finds by exact cosine similarity.
"""

from __future__ import annotations

import bisect
import functools
import hashlib
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import transport as tp
from .profiles import Profile, similarity
from .transport import LocalTransport, Message, Transport

ID_BITS = 160
# top bits of a storage key carry the signature-set index
SET_PREFIX_BITS = 8


@functools.lru_cache(maxsize=None)
def node_id(peer: int) -> int:
    return int.from_bytes(hashlib.sha1(f"peer:{peer}".encode()).digest(), "big")


def xor_distance(a: int, b: int) -> int:
    return a ^ b


def bucket_index(own: int, other: int) -> int:
    """Index of the highest differing bit; -1 for identical ids."""
    return (own ^ other).bit_length() - 1


@dataclass
class DHTConfig:
    k: int = 8
    alpha: int = 3
    sets: int = 4
    bits: int = 16
    probe_radius: int = 1
    t_repub: int = 50
    expiry: int = 120
    # event-time units before an unanswered RPC counts as failed
    rpc_timeout: int = 12
    hyperplane_seed: int = 0


# -- routing ---------------------------------------------------------------------


class RoutingTable:
    """160 k-buckets, each ordered least-recently-seen first.

    A full bucket keeps its old contacts; newcomers wait in a small
    replacement cache and are promoted when a contact is evicted for failing.
    """

    def __init__(self, own_id: int, k: int = 8):
        self.own_id = own_id
        self.k = k
        self.buckets: list[list[tuple[int, int]]] = [[] for _ in range(ID_BITS)]
        self.replacements: list[list[tuple[int, int]]] = [[] for _ in range(ID_BITS)]

    def __len__(self) -> int:
        return sum(len(b) for b in self.buckets)

    def __contains__(self, peer: int) -> bool:
        return any(p == peer for b in self.buckets for _, p in b)

    def contacts(self) -> Iterator[tuple[int, int]]:
        for b in self.buckets:
            yield from b

    def update(self, nid: int, peer: int) -> None:
        j = bucket_index(self.own_id, nid)
        if j < 0:
            return
        bucket = self.buckets[j]
        for i, (_, p) in enumerate(bucket):
            if p == peer:
                bucket.append(bucket.pop(i))
                return
        if len(bucket) < self.k:
            bucket.append((nid, peer))
            return
        cache = self.replacements[j]
        cache[:] = [c for c in cache if c[1] != peer]
        cache.append((nid, peer))
        del cache[: -self.k]

    def remove(self, nid: int, peer: int) -> None:
        j = bucket_index(self.own_id, nid)
        if j < 0:
            return
        bucket = self.buckets[j]
        before = len(bucket)
        bucket[:] = [c for c in bucket if c[1] != peer]
        cache = self.replacements[j]
        cache[:] = [c for c in cache if c[1] != peer]
        if len(bucket) < before and cache:
            bucket.append(cache.pop())

    def closest(self, target: int, count: int) -> list[tuple[int, int]]:
        """The ``count`` contacts nearest ``target``, nearest first (ties by peer id).

        With ``h`` the top bit of ``own ^ target``, bucket ``h`` holds every
        contact closer than ``2**h``, all lower buckets share distance band
        ``[2**h, 2**(h+1))``, and each higher bucket ``j`` is band ``j``. So
        buckets can be consumed band by band without sorting the whole table.
        """
        h = (self.own_id ^ target).bit_length() - 1

        def key(c: tuple[int, int]) -> tuple[int, int]:
            return (c[0] ^ target, c[1])

        out: list[tuple[int, int]] = []
        if h >= 0:
            out.extend(sorted(self.buckets[h], key=key))
            if len(out) < count:
                low = [c for b in self.buckets[:h] if b for c in b]
                out.extend(sorted(low, key=key))
        for b in self.buckets[h + 1 :]:
            if len(out) >= count:
                break
            if b:
                out.extend(sorted(b, key=key))
        return out[:count]


# -- lookups ---------------------------------------------------------------------

NEW, INFLIGHT, DONE, FAILED = range(4)


@dataclass(slots=True)
class _Candidate:
    nid: int
    distance: int
    state: int = NEW
    depth: int = 1


class Lookup:
    """Iterative Kademlia lookup as a pure state machine.

    The lookup keeps at most ``alpha`` probes in flight and always probes the
    closest unprobed candidates among the current best ``k``. It finishes when
    the best ``k`` non-failed candidates have all answered, or, for value
    lookups, as soon as one holder returns records.
    """

    def __init__(
        self,
        lid: int,
        target: int,
        k: int,
        alpha: int,
        own: tuple[int, int],
        seeds: Iterable[tuple[int, int]],
        want_value: bool = False,
    ):
        self.lid = lid
        self.target = target
        self.k = k
        self.alpha = alpha
        self.want_value = want_value
        self.cands: dict[int, _Candidate] = {}
        own_nid, own_peer = own
        self.cands[own_peer] = _Candidate(own_nid, own_nid ^ target, DONE, 0)
        for nid, peer in seeds:
            self._learn(nid, peer, 1)
        self.inflight = 0
        self.rpcs = 0
        self.failures = 0
        self.records: list | None = None
        self.finished = False

    def _learn(self, nid: int, peer: int, depth: int) -> None:
        cur = self.cands.get(peer)
        if cur is None:
            self.cands[peer] = _Candidate(nid, nid ^ self.target, NEW, depth)
        elif cur.state == NEW and depth < cur.depth:
            cur.depth = depth

    def _best(self) -> list[tuple[int, _Candidate]]:
        live = [(p, c) for p, c in self.cands.items() if c.state != FAILED]
        live.sort(key=lambda t: (t[1].distance, t[0]))
        return live[: self.k]

    def pump(self) -> list[int]:
        """Peers to probe now; marks them in flight."""
        if self.finished:
            return []
        out = []
        pending = False
        for peer, c in self._best():
            if c.state == NEW:
                pending = True
                if self.inflight < self.alpha:
                    c.state = INFLIGHT
                    self.inflight += 1
                    self.rpcs += 1
                    out.append(peer)
        if not pending and self.inflight == 0:
            self.finished = True
        return out

    def on_reply(self, peer: int, contacts: Sequence[tuple[int, int]], records: list | None = None) -> None:
        c = self.cands.get(peer)
        if c is None or c.state != INFLIGHT:
            return
        c.state = DONE
        self.inflight -= 1
        if self.finished:
            return
        for nid, p in contacts:
            self._learn(nid, p, c.depth + 1)
        if self.want_value and records:
            self.records = list(records)
            self.finished = True

    def on_timeout(self, peer: int) -> None:
        c = self.cands.get(peer)
        if c is None or c.state != INFLIGHT:
            return
        c.state = FAILED
        self.inflight -= 1
        self.failures += 1

    @property
    def hops(self) -> int:
        return max((c.depth for c in self.cands.values() if c.state == DONE), default=0)

    def result(self) -> list[tuple[int, int]]:
        """Best ``k`` responsive nodes, closest first, as ``(node id, peer)``."""
        done = [(p, c) for p, c in self.cands.items() if c.state == DONE]
        done.sort(key=lambda t: (t[1].distance, t[0]))
        return [(c.nid, p) for p, c in done[: self.k]]

    @property
    def complete(self) -> bool:
        return self.failures == 0 or len(self.result()) >= self.k

    def contacted(self) -> set[int]:
        return {p for p, c in self.cands.items() if c.state in (DONE, FAILED, INFLIGHT) and c.depth > 0}


# -- simhash ---------------------------------------------------------------------


class SimHasher:
    """``sets`` independent families of ``bits`` Gaussian hyperplanes over the label space."""

    def __init__(self, n_labels: int, bits: int = 16, sets: int = 4, seed: int = 0):
        self.n_labels = n_labels
        self.bits = bits
        self.sets = sets
        self.seed = seed
        self.planes = [hyperplanes(seed, i, bits, n_labels) for i in range(sets)]
        self._weights = _place_values(bits)

    def signature(self, p: Profile, set_index: int) -> int:
        return simhash_signature(p, self.planes[set_index], self._weights)

    def signatures(self, p: Profile) -> tuple[int, ...]:
        return tuple(self.signature(p, i) for i in range(self.sets))

    def probe_keys(self, p: Profile, radius: int) -> list[int]:
        keys: dict[int, None] = {}
        for i, sig in enumerate(self.signatures(p)):
            for s in probe_signatures(sig, self.bits, radius):
                keys[signature_key(i, s)] = None
        return list(keys)


def hyperplanes(seed: int, set_index: int, bits: int, n_labels: int) -> np.ndarray:
    return np.random.default_rng([seed, set_index]).standard_normal((bits, n_labels))


def simhash_signature(p: Profile, planes: np.ndarray, weights: np.ndarray | None = None) -> int:
    """Bit ``j`` is set iff the profile lies on the non-negative side of hyperplane ``j``."""
    labels = np.fromiter(p.weights.keys(), dtype=np.int64, count=len(p))
    vals = np.fromiter(p.weights.values(), dtype=float, count=len(p))
    dots = planes[:, labels] @ vals
    if weights is None:
        weights = _place_values(planes.shape[0])
    if weights is _WIDE:
        return sum(1 << int(j) for j in np.flatnonzero(dots >= 0))
    return int(weights[dots >= 0].sum())


# marker for signatures too wide for int64 arithmetic
_WIDE = np.empty(0)


def _place_values(bits: int) -> np.ndarray:
    return 1 << np.arange(bits, dtype=np.int64) if bits <= 62 else _WIDE


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def probe_signatures(sig: int, bits: int, radius: int) -> Iterator[int]:
    """Every signature within Hamming distance ``radius``, nearest first."""
    for r in range(min(radius, bits) + 1):
        for flips in itertools.combinations(range(bits), r):
            s = sig
            for b in flips:
                s ^= 1 << b
            yield s


def signature_key(set_index: int, signature: int) -> int:
    digest = hashlib.sha1(f"sig:{set_index}:{signature}".encode()).digest()
    low = int.from_bytes(digest, "big") >> SET_PREFIX_BITS
    return (set_index << (ID_BITS - SET_PREFIX_BITS)) | low


# -- records ---------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class DescriptorRecord:
    representative: int
    descriptor: Profile
    signatures: tuple[int, ...]
    epoch: int
    # cycle of issuance; orders records of the same epoch
    issued: int = 0
    # False marks a tombstone that retires the representative
    active: bool = True

    @property
    def version(self) -> tuple[int, int]:
        return (self.epoch, self.issued)


def make_record(
    rep: int, profile: Profile, hasher: SimHasher, epoch: int, issued: int = 0, active: bool = True
) -> DescriptorRecord:
    return DescriptorRecord(rep, profile, hasher.signatures(profile), epoch, issued, active)


@dataclass
class SearchResult:
    records: list[DescriptorRecord]
    scores: list[float]
    keys_probed: int = 0
    candidates: int = 0
    rpcs: int = 0
    contacts: set[int] = field(default_factory=set)
    incomplete: bool = False

    def ranked(self) -> list[tuple[DescriptorRecord, float]]:
        return list(zip(self.records, self.scores))


@dataclass
class RegisterResult:
    receipts: list[tuple[int, int]] = field(default_factory=list)
    incomplete: bool = False


class _Stored:
    __slots__ = ("record", "refreshed")

    def __init__(self, record: DescriptorRecord, refreshed: int):
        self.record = record
        self.refreshed = refreshed


# -- node --------------------------------------------------------------------------


class DHTNode:
    def __init__(
        self,
        peer: int,
        transport: Transport,
        config: DHTConfig,
        hasher: SimHasher | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.peer = peer
        self.nid = node_id(peer)
        self.transport = transport
        self.config = config
        self.hasher = hasher
        self.clock = clock or (lambda: 0)
        self.table = RoutingTable(self.nid, config.k)
        self.storage: dict[int, dict[int, _Stored]] = {}
        # highest record version seen per representative
        self.versions: dict[int, tuple[int, int]] = {}
        self.lookups: dict[int, tuple[Lookup, Callable[[Lookup], None], int | None]] = {}
        self.pending_stores: dict[int, Callable[[int, bool], None]] = {}
        self._ids = itertools.count()
        self.alive = True

    # -- messaging ------------------------------------------------------------

    def _send(self, kind: str, dst: int, body, qid: int | None = None) -> None:
        self.transport.send(Message(kind, self.peer, dst, body, qid))

    def receive(self, msg: Message) -> bool:
        kind = msg.kind
        if kind not in _DHT_KINDS:
            return False
        self.table.update(node_id(msg.src), msg.src)
        if kind == tp.FIND_NODE:
            lid, target = msg.body
            self._send(tp.FIND_NODE_REP, msg.src, (lid, self._closest_with_self(target), None), msg.qid)
        elif kind == tp.FIND_VALUE:
            lid, key = msg.body
            records = self.records_at(key)
            self._send(tp.FIND_VALUE_REP, msg.src, (lid, self._closest_with_self(key), records or None), msg.qid)
        elif kind in (tp.FIND_NODE_REP, tp.FIND_VALUE_REP):
            lid, contacts, records = msg.body
            entry = self.lookups.get(lid)
            if entry is not None:
                entry[0].on_reply(msg.src, contacts, records)
                self._advance(lid)
        elif kind == tp.STORE:
            op, key, record = msg.body
            self.store_local(key, record)
            self._send(tp.STORE_ACK, msg.src, (op, key), msg.qid)
        elif kind == tp.STORE_ACK:
            op, _key = msg.body
            cb = self.pending_stores.pop(op, None)
            if cb is not None:
                cb(msg.src, True)
        elif kind == tp.PING:
            self._send(tp.PONG, msg.src, msg.body, msg.qid)
        return True

    def _closest_with_self(self, target: int) -> tuple[tuple[int, int], ...]:
        out = self.table.closest(target, self.config.k)
        out.append((self.nid, self.peer))
        out.sort(key=lambda c: (c[0] ^ target, c[1]))
        return tuple(out[: self.config.k])

    # -- lookups ---------------------------------------------------------------

    def start_lookup(
        self,
        target: int,
        on_done: Callable[[Lookup], None],
        want_value: bool = False,
        qid: int | None = None,
        seeds: Iterable[tuple[int, int]] | None = None,
    ) -> Lookup:
        lid = next(self._ids)
        if seeds is None:
            seeds = self.table.closest(target, self.config.k)
        lk = Lookup(lid, target, self.config.k, self.config.alpha, (self.nid, self.peer), seeds, want_value)
        if want_value:
            local = self.records_at(target)
            if local:
                lk.records = local
                lk.finished = True
        self.lookups[lid] = (lk, on_done, qid)
        self._advance(lid)
        return lk

    def _advance(self, lid: int) -> None:
        lk, on_done, qid = self.lookups[lid]
        kind = tp.FIND_VALUE if lk.want_value else tp.FIND_NODE
        for peer in lk.pump():
            self._send(kind, peer, (lid, lk.target), qid)
            self.transport.set_timer(self.peer, self.config.rpc_timeout, _Timeout(self, lid, peer))
        if lk.finished:
            # a found value ends the lookup even with probes still in flight
            del self.lookups[lid]
            on_done(lk)

    def _rpc_timeout(self, lid: int, peer: int) -> None:
        if not self.alive:
            return
        entry = self.lookups.get(lid)
        if entry is None:
            return
        lk = entry[0]
        cand = lk.cands.get(peer)
        if cand is None or cand.state != INFLIGHT:
            return
        lk.on_timeout(peer)
        self.table.remove(cand.nid, peer)
        self._advance(lid)

    # -- storage ---------------------------------------------------------------

    def records_at(self, key: int) -> list[DescriptorRecord]:
        bucket = self.storage.get(key)
        if not bucket:
            return []
        return [s.record for _, s in sorted(bucket.items())]

    def store_local(self, key: int, record: DescriptorRecord) -> bool:
        """Apply a STORE; newer versions of a representative purge older ones everywhere on this node."""
        rep = record.representative
        known = self.versions.get(rep)
        if known is not None and record.version < known:
            return False
        if known is not None and record.version > known:
            for k in list(self.storage):
                self.storage[k].pop(rep, None)
                if not self.storage[k]:
                    del self.storage[k]
        self.versions[rep] = record.version
        self.storage.setdefault(key, {})[rep] = _Stored(record, self.clock())
        return True

    def expire(self, now: int) -> None:
        horizon = now - self.config.expiry
        for key in list(self.storage):
            bucket = self.storage[key]
            for rep in [r for r, s in bucket.items() if s.refreshed < horizon]:
                del bucket[rep]
            if not bucket:
                del self.storage[key]

    def held_records(self) -> list[DescriptorRecord]:
        return [s.record for b in self.storage.values() for s in b.values()]

    # -- high level operations -------------------------------------------------

    def register(
        self,
        record: DescriptorRecord,
        on_done: Callable[[RegisterResult], None] | None = None,
        qid: int | None = None,
    ) -> "_RegisterOp":
        return _RegisterOp(self, record, on_done, qid)

    def search(
        self,
        sample: Profile,
        k: int,
        radius: int,
        on_done: Callable[[SearchResult], None],
        qid: int | None = None,
    ) -> "_SearchOp":
        return _SearchOp(self, sample, k, radius, on_done, qid)

    def join(self, bootstrap: int, on_done: Callable[[Lookup], None] | None = None) -> Lookup:
        """Enter the network through one known peer by looking up our own id."""
        return self.start_lookup(self.nid, on_done or (lambda _lk: None), seeds=[(node_id(bootstrap), bootstrap)])


_DHT_KINDS = frozenset(
    {tp.PING, tp.PONG, tp.FIND_NODE, tp.FIND_NODE_REP, tp.FIND_VALUE, tp.FIND_VALUE_REP, tp.STORE, tp.STORE_ACK}
)


class _Timeout:
    __slots__ = ("node", "lid", "peer")

    def __init__(self, node: DHTNode, lid: int, peer: int):
        self.node, self.lid, self.peer = node, lid, peer

    def __call__(self) -> None:
        self.node._rpc_timeout(self.lid, self.peer)


class _RegisterOp:
    """STORE a record at the ``k`` nodes closest to each of its signature keys."""

    def __init__(self, node: DHTNode, record: DescriptorRecord, on_done, qid):
        self.node = node
        self.record = record
        self.on_done = on_done
        self.qid = qid
        self.result = RegisterResult()
        self.open_lookups = len(record.signatures)
        self.open_stores = 0
        self.finished = False
        for i, sig in enumerate(record.signatures):
            key = signature_key(i, sig)
            node.start_lookup(key, lambda lk, key=key: self._stored_at(key, lk), qid=qid)

    def _stored_at(self, key: int, lk: Lookup) -> None:
        self.open_lookups -= 1
        if not lk.complete:
            self.result.incomplete = True
        for _nid, peer in lk.result():
            if peer == self.node.peer:
                self.node.store_local(key, self.record)
                self.result.receipts.append((key, peer))
                continue
            op = next(self.node._ids)
            self.open_stores += 1
            self.node.pending_stores[op] = lambda holder, ok, key=key: self._ack(key, holder, ok)
            self.node._send(tp.STORE, peer, (op, key, self.record), self.qid)
            self.node.transport.set_timer(self.node.peer, self.node.config.rpc_timeout, _StoreTimeout(self.node, op, peer))
        self._check()

    def _ack(self, key: int, holder: int, ok: bool) -> None:
        self.open_stores -= 1
        if ok:
            self.result.receipts.append((key, holder))
        else:
            self.result.incomplete = True
        self._check()

    def _check(self) -> None:
        if not self.finished and self.open_lookups == 0 and self.open_stores == 0:
            self.finished = True
            if self.on_done is not None:
                self.on_done(self.result)


class _StoreTimeout:
    __slots__ = ("node", "op", "peer")

    def __init__(self, node: DHTNode, op: int, peer: int):
        self.node, self.op, self.peer = node, op, peer

    def __call__(self) -> None:
        if not self.node.alive:
            return
        cb = self.node.pending_stores.pop(self.op, None)
        if cb is not None:
            self.node.table.remove(node_id(self.peer), self.peer)
            cb(self.peer, False)


class _SearchOp:
    """Multiprobe simhash search: one value lookup per probed key, then exact re-ranking."""

    def __init__(self, node: DHTNode, sample: Profile, k: int, radius: int, on_done, qid):
        if k < 1 or radius < 0:
            raise ValueError("search needs k >= 1 and radius >= 0")
        if node.hasher is None:
            raise ValueError("node has no simhash configuration")
        self.node = node
        self.sample = sample
        self.k = k
        self.on_done = on_done
        self.found: dict[int, DescriptorRecord] = {}
        self.result = SearchResult([], [])
        keys = node.hasher.probe_keys(sample, radius)
        self.result.keys_probed = len(keys)
        self.open = len(keys)
        self.finished = False
        for key in keys:
            node.start_lookup(key, self._collect, want_value=True, qid=qid)
        self._check()

    def _collect(self, lk: Lookup) -> None:
        self.open -= 1
        self.result.rpcs += lk.rpcs
        self.result.contacts |= lk.contacted()
        if not lk.complete:
            self.result.incomplete = True
        for rec in lk.records or ():
            cur = self.found.get(rec.representative)
            if cur is None or rec.version > cur.version:
                self.found[rec.representative] = rec
        self._check()

    def _check(self) -> None:
        if self.finished or self.open:
            return
        self.finished = True
        live = [r for r in self.found.values() if r.active]
        scored = sorted(
            ((similarity(self.sample, r.descriptor), r) for r in live),
            key=lambda t: (-t[0], t[1].representative),
        )[: self.k]
        self.result.candidates = len(live)
        self.result.records = [r for _, r in scored]
        self.result.scores = [s for s, _ in scored]
        self.on_done(self.result)


# -- synchronous facade --------------------------------------------------------------


@dataclass
class LookupResult:
    nodes: list[tuple[int, int]]
    hops: int
    rpcs: int
    complete: bool


class DHTNetwork:
    """A set of DHT nodes wired through :class:`LocalTransport`, driven synchronously."""

    def __init__(self, peers: Iterable[int], config: DHTConfig | None = None, n_labels: int | None = None):
        self.config = config or DHTConfig()
        self.hasher = (
            SimHasher(n_labels, self.config.bits, self.config.sets, self.config.hyperplane_seed)
            if n_labels is not None
            else None
        )
        self.nodes: dict[int, DHTNode] = {}
        self.transport = LocalTransport(self.nodes)
        for p in peers:
            self.nodes[p] = DHTNode(p, self.transport, self.config, self.hasher)

    def live(self) -> list[DHTNode]:
        return [n for n in self.nodes.values() if n.alive]

    def bootstrap_full(self, rng: random.Random) -> None:
        fill_routing_tables(self.live(), rng)

    def remove(self, peer: int) -> None:
        self.nodes[peer].alive = False

    def brute_force_closest(self, target: int, k: int | None = None) -> list[tuple[int, int]]:
        k = k or self.config.k
        return sorted(((n.nid, n.peer) for n in self.live()), key=lambda c: (c[0] ^ target, c[1]))[:k]

    def iterative_find_node(self, start: int, target: int, alpha: int | None = None) -> LookupResult:
        if alpha is not None and alpha < 1:
            raise ValueError("alpha must be >= 1")
        node = self.nodes[start]
        saved = node.config
        if alpha is not None:
            node.config = DHTConfig(**{**saved.__dict__, "alpha": alpha})
        box: list[Lookup] = []
        try:
            node.start_lookup(target, box.append)
            self.transport.run()
        finally:
            node.config = saved
        lk = box[0]
        return LookupResult(lk.result(), lk.hops, lk.rpcs, lk.complete)

    def register_representative(self, record: DescriptorRecord) -> RegisterResult:
        box: list[RegisterResult] = []
        self.nodes[record.representative].register(record, box.append)
        self.transport.run()
        return box[0]

    def approx_search(self, entry: int, sample: Profile, k: int, radius: int | None = None) -> SearchResult:
        box: list[SearchResult] = []
        r = self.config.probe_radius if radius is None else radius
        self.nodes[entry].search(sample, k, r, box.append)
        self.transport.run()
        return box[0]

    def holders_of(self, representative: int) -> list[tuple[int, DescriptorRecord]]:
        out = []
        for n in self.live():
            for rec in n.held_records():
                if rec.representative == representative:
                    out.append((n.peer, rec))
        return out


def fill_routing_tables(nodes: Sequence[DHTNode], rng: random.Random) -> None:
    """Give every node the routing table of a long-running network.

    Each bucket receives up to ``k`` members drawn at random from the id range
    it covers, which is what an LRS-ordered bucket converges to once every
    node has been seen.
    """
    ordered = sorted((n.nid, n.peer) for n in nodes)
    ids = [nid for nid, _ in ordered]
    for n in nodes:
        x = n.nid
        table = n.table
        for j in range(ID_BITS - 1, -1, -1):
            lo = ((x >> j) ^ 1) << j
            hi = lo + (1 << j)
            a = bisect.bisect_left(ids, lo)
            b = bisect.bisect_left(ids, hi)
            if a == b:
                continue
            members = ordered[a:b]
            if len(members) > table.k:
                members = rng.sample(members, table.k)
            table.buckets[j] = list(members)
