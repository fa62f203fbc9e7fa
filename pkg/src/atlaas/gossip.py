"""Unstructured layer: a Cyclon-style random view plus a Vicinity-style similar view.

Both protocols are cycle driven. A peer calls :meth:`GossipState.tick` once per
cycle to age its entries, then initiates one exchange per layer. Replies and
requests are plain tuples of :class:`ViewEntry` copies carried in messages.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .profiles import Profile, similarity


@dataclass(slots=True, eq=False)
class ViewEntry:
    peer: int
    profile: Profile
    age: int = 0
    # representative the peer followed when it issued this entry, if known
    community: int | None = None

    def copy(self) -> "ViewEntry":
        return ViewEntry(self.peer, self.profile, self.age, self.community)


@dataclass
class GossipConfig:
    random_capacity: int = 20
    similar_capacity: int = 10
    # entries older than this are ignored when merging into the similar view
    max_similar_age: int = 40

    @property
    def shuffle_length(self) -> int:
        return math.ceil(self.random_capacity / 2)


_SCORE_CACHE = 8192


def _rank_key(score: float, peer: int) -> tuple[float, int]:
    return (-score, peer)



@dataclass
class GossipState:
    owner: int
    profile: Profile
    config: GossipConfig = field(default_factory=GossipConfig)
    random_view: list[ViewEntry] = field(default_factory=list)
    similar_view: list[ViewEntry] = field(default_factory=list)
    # similarity of the owner to another peer's profile; the simulator injects a cached one
    score: Callable[[int, Profile], float] | None = None
    community: int | None = None

    # peers handed away in the outstanding shuffle, per partner
    _shuffle_sent: dict[int, set[int]] = field(default_factory=dict)
    # peers already contacted in the current round over the similar view
    _contacted: set[int] = field(default_factory=set)
    _pending_similar: int | None = None
    # peer -> similarity to the owner; a peer's profile never changes, so entries stay valid
    _scores: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.score is None:
            self.score = lambda _peer, prof: similarity(self.profile, prof)

    def score_of(self, peer: int, profile: Profile) -> float:
        s = self._scores.get(peer)
        if s is None:
            if len(self._scores) >= _SCORE_CACHE:
                self._scores.clear()
            s = self._scores[peer] = self.score(peer, profile)
        return s

    # -- helpers --------------------------------------------------------------

    def self_entry(self) -> ViewEntry:
        return ViewEntry(self.owner, self.profile, 0, self.community)

    def similarity_to(self, entry: ViewEntry) -> float:
        return self.score_of(entry.peer, entry.profile)

    def seed_random(self, entries: Iterable[ViewEntry]) -> None:
        """Bootstrap the random view; extra entries beyond capacity are ignored."""
        for e in entries:
            if e.peer == self.owner or any(x.peer == e.peer for x in self.random_view):
                continue
            if len(self.random_view) >= self.config.random_capacity:
                break
            self.random_view.append(e.copy())

    def neighbors(self) -> list[int]:
        seen = dict.fromkeys(e.peer for e in self.similar_view)
        seen.update(dict.fromkeys(e.peer for e in self.random_view))
        return list(seen)

    def forget(self, peer: int) -> None:
        self.random_view = [e for e in self.random_view if e.peer != peer]
        self.similar_view = [e for e in self.similar_view if e.peer != peer]
        self._contacted.discard(peer)

    def tick(self) -> None:
        for e in self.random_view:
            e.age += 1
        for e in self.similar_view:
            e.age += 1

    # -- random layer -----------------------------------------------------------

    def oldest_random(self) -> ViewEntry | None:
        if not self.random_view:
            return None
        return max(self.random_view, key=lambda e: (e.age, -e.peer))

    def random_shuffle_step(self, rng: random.Random) -> tuple[int, list[ViewEntry]] | None:
        """Start a shuffle with the oldest neighbor.

        The partner is removed from the view up front: if it is alive, its own
        fresh entry comes back in the reply; if it churned, it stays gone.
        """
        partner = self.oldest_random()
        if partner is None:
            return None
        self.random_view.remove(partner)
        others = rng.sample(self.random_view, min(len(self.random_view), self.config.shuffle_length - 1))
        self._shuffle_sent[partner.peer] = {e.peer for e in others}
        return partner.peer, [self.self_entry()] + [e.copy() for e in others]

    def handle_shuffle_request(
        self, sender: int, entries: Sequence[ViewEntry], rng: random.Random
    ) -> list[ViewEntry]:
        pool = [e for e in self.random_view if e.peer != sender]
        reply = rng.sample(pool, min(len(pool), self.config.shuffle_length - 1))
        out = [self.self_entry()] + [e.copy() for e in reply]
        self._merge_random(entries, {e.peer for e in reply})
        return out

    def handle_shuffle_reply(self, sender: int, entries: Sequence[ViewEntry]) -> None:
        sent = self._shuffle_sent.pop(sender, set())
        self._merge_random(entries, sent)

    def _merge_random(self, received: Sequence[ViewEntry], sent_away: set[int]) -> None:
        cap = self.config.random_capacity
        view = self.random_view
        index = {e.peer: e for e in view}
        for e in received:
            if e.peer == self.owner:
                continue
            cur = index.get(e.peer)
            if cur is not None:
                if e.age <= cur.age:
                    cur.age, cur.profile, cur.community = e.age, e.profile, e.community
                continue
            if len(view) >= cap:
                victim = next((v for v in view if v.peer in sent_away), None)
                if victim is None:
                    victim = max(view, key=lambda x: (x.age, -x.peer))
                sent_away.discard(victim.peer)
                view.remove(victim)
                del index[victim.peer]
            new = ViewEntry(e.peer, e.profile, e.age, e.community)
            view.append(new)
            index[new.peer] = new

    # -- similarity layer -------------------------------------------------------

    def pick_similar_partner(self) -> ViewEntry | None:
        """Most similar neighbor not yet contacted in the current round.

        The similar view is kept sorted, so the first fresh entry wins. Once
        every entry has been contacted a new round starts. With an empty
        similar view, fall back to the most similar random-view entry.
        """
        if self.similar_view:
            for e in self.similar_view:
                if e.peer not in self._contacted:
                    return e
            self._contacted.clear()
            return self.similar_view[0]
        if not self.random_view:
            return None
        return min(self.random_view, key=lambda e: _rank_key(self.similarity_to(e), e.peer))

    def similar_payload(self, exclude: int) -> list[ViewEntry]:
        """Self entry, the similar view, then random entries, capped at the random capacity."""
        cap = self.config.random_capacity
        out = [self.self_entry()]
        seen = {self.owner, exclude}
        for e in (*self.similar_view, *self.random_view):
            if len(out) >= cap:
                break
            if e.peer not in seen:
                seen.add(e.peer)
                out.append(ViewEntry(e.peer, e.profile, e.age, e.community))
        return out

    def similar_select_step(self) -> tuple[int, list[ViewEntry]] | None:
        """Start an exchange with the chosen similar partner.

        A partner that never answered the previous request is treated as
        unreachable: it is forgotten and this cycle's exchange is skipped.
        """
        if self._pending_similar is not None:
            lost = self._pending_similar
            self._pending_similar = None
            self.forget(lost)
            return None
        partner = self.pick_similar_partner()
        if partner is None:
            return None
        self._contacted.add(partner.peer)
        self._pending_similar = partner.peer
        return partner.peer, self.similar_payload(partner.peer)

    def handle_similar_request(self, sender: int, entries: Sequence[ViewEntry]) -> list[ViewEntry]:
        reply = self.similar_payload(sender)
        self.merge_similar(entries)
        return reply

    def handle_similar_reply(self, sender: int, entries: Sequence[ViewEntry]) -> None:
        if self._pending_similar == sender:
            self._pending_similar = None
        self.merge_similar(entries)

    def merge_similar(self, received: Iterable[ViewEntry] = ()) -> None:
        """Keep the top ``similar_capacity`` known peers by similarity to the owner."""
        best: dict[int, ViewEntry] = {}
        owned: set[int] = set()
        max_age = self.config.max_similar_age
        owner = self.owner
        for e in self.similar_view:
            if e.age <= max_age:
                best[e.peer] = e
                owned.add(e.peer)
        for e in (*received, *self.random_view):
            if e.peer == owner or e.age > max_age:
                continue
            cur = best.get(e.peer)
            if cur is None or e.age < cur.age:
                best[e.peer] = e
                owned.discard(e.peer)
        cache = self._scores
        ranked = []
        for e in best.values():
            s = cache.get(e.peer)
            if s is None:
                s = self.score_of(e.peer, e.profile)
            ranked.append((-s, e.peer, e))
        # peers are unique, so tuple comparison never reaches the entry itself
        ranked.sort()
        # entries taken from the random view or a message must not be aliased
        self.similar_view = [
            e if p in owned else ViewEntry(p, e.profile, e.age, e.community)
            for _, p, e in ranked[: self.config.similar_capacity]
        ]

    def check_invariants(self) -> None:
        for view, cap in ((self.random_view, self.config.random_capacity),
                          (self.similar_view, self.config.similar_capacity)):
            peers = [e.peer for e in view]
            assert len(view) <= cap, f"view over capacity at {self.owner}"
            assert self.owner not in peers, f"self entry in view of {self.owner}"
            assert len(set(peers)) == len(peers), f"duplicate entries in view of {self.owner}"
        keys = [_rank_key(self.similarity_to(e), e.peer) for e in self.similar_view]
        assert keys == sorted(keys), f"similar view of {self.owner} not sorted"


def view_quality(state: GossipState, oracle: Sequence[tuple[int, float]]) -> float:
    """Fraction of the exact top neighbors that the similar view holds.

    ``oracle`` is the brute-force top list for the owner over the rest of the
    population, truncated at the similar-view capacity.
    """
    target = {pid for pid, _ in oracle[: state.config.similar_capacity]}
    if not target:
        return 1.0
    have = {e.peer for e in state.similar_view}
    return len(have & target) / len(target)
