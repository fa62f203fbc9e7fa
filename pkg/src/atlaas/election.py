"""Similarity-gated epidemic max-aggregation that elects one representative per community.

Every peer starts as its own candidate with its centrality score. Candidate
states ride on similar-layer messages; a peer adopts an incoming candidate when
the candidate's profile is similar enough to its own and the pair
``(score, -peer_id)`` beats what it currently holds. Epochs restart the
aggregation: periodically, and whenever a peer stops hearing about its
representative for longer than the repair timeout.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Sequence

from .profiles import Profile, similarity


@dataclass
class ElectionConfig:
    tau_adopt: float = 0.5
    # overlay warm-up before epoch 0 opens; scores are snapshot at epoch start
    warmup: int = 20
    e_conv: int = 30
    t_repair: int = 10
    period: int = 100


@dataclass(frozen=True, slots=True)
class ElectionState:
    candidate: int
    candidate_profile: Profile
    candidate_score: float
    epoch: int
    # latest cycle at which the candidate itself was known to be alive
    heartbeat: int = 0
    # representative this candidacy replaces, so former followers restart with it
    prior: int | None = None
    prior_profile: Profile | None = None

    def beats(self, other: "ElectionState") -> bool:
        return (self.candidate_score, -self.candidate) > (other.candidate_score, -other.candidate)


def centrality_score(similarities: Sequence[float]) -> float:
    """Mean similarity between a peer and its similar-view entries (0 for an empty view)."""
    return fmean(similarities) if similarities else 0.0


class Elector:
    """Election state machine of one peer.

    ``score_fn`` returns the owner's current centrality; ``sim_fn`` the
    similarity between the owner's profile and another profile.
    """

    def __init__(
        self,
        owner: int,
        profile: Profile,
        config: ElectionConfig,
        score_fn: Callable[[], float],
        sim_fn: Callable[[int, Profile], float] | None = None,
    ):
        self.owner = owner
        self.profile = profile
        self.config = config
        self.score_fn = score_fn
        self.sim_fn = sim_fn or (lambda _pid, prof: similarity(profile, prof))
        self.state: ElectionState | None = None
        self.epoch_start = 0
        self.last_fresh = 0
        # centrality advertised by this peer in its latest self-candidacy
        self.own_score: float | None = None
        # cycles at which this peer fired the repair trigger
        self.triggers: list[int] = []

    @property
    def active(self) -> bool:
        return self.state is not None

    @property
    def community(self) -> int | None:
        return None if self.state is None else self.state.candidate

    def _self_candidacy(self, epoch: int, cycle: int) -> None:
        old = self.state
        prior = prior_profile = None
        if old is not None:
            prior, prior_profile = old.candidate, old.candidate_profile
        self.own_score = self.score_fn()
        self.state = ElectionState(
            self.owner, self.profile, self.own_score, epoch, cycle, prior, prior_profile
        )
        self.epoch_start = cycle
        self.last_fresh = cycle

    def start(self, cycle: int, epoch: int = 0) -> None:
        self._self_candidacy(epoch, cycle)

    def is_representative(self) -> bool:
        """Self is the candidate until something better is adopted, including before epoch 0 opens."""
        return self.state is None or self.state.candidate == self.owner

    def epoch_age(self, cycle: int) -> int:
        return cycle - self.epoch_start

    def silence(self, cycle: int) -> int:
        return cycle - self.last_fresh

    def reelection_trigger(self, cycle: int) -> bool:
        """True when the representative has been silent for strictly more than ``t_repair`` cycles."""
        if self.state is None or self.state.candidate == self.owner:
            return False
        return self.silence(cycle) > self.config.t_repair

    def on_cycle(self, cycle: int) -> None:
        """Per-cycle bookkeeping: open epoch 0, heartbeat, repair and periodic re-election."""
        if self.state is None:
            if cycle >= self.config.warmup:
                self.start(cycle)
            return
        st = self.state
        if self.reelection_trigger(cycle):
            self.triggers.append(cycle)
            self._self_candidacy(st.epoch + 1, cycle)
        elif self.epoch_age(cycle) >= self.config.period:
            self._self_candidacy(st.epoch + 1, cycle)
        elif st.candidate == self.owner:
            self.state = _with_heartbeat(st, cycle)
            self.last_fresh = cycle

    def outgoing(self) -> ElectionState | None:
        return self.state

    def election_step(self, incoming: Sequence[ElectionState], cycle: int) -> None:
        for other in incoming:
            self._consider(other, cycle)

    def _consider(self, other: ElectionState, cycle: int) -> None:
        st = self.state
        if st is None:
            return
        if other.epoch < st.epoch:
            return
        if other.epoch > st.epoch:
            # only follow a restart of our own community or one whose candidate we could adopt
            if other.prior != st.candidate and not self._admissible(other):
                return
            self._self_candidacy(other.epoch, cycle)
            st = self.state
        if other.candidate == st.candidate:
            if other.heartbeat > st.heartbeat:
                self.state = _with_heartbeat(st, other.heartbeat)
                self.last_fresh = cycle
            return
        if other.candidate == self.owner:
            # someone still advertises us with an outdated score; our own state is authoritative
            return
        if not other.beats(st) or not self._admissible(other):
            return
        self.state = other
        self.last_fresh = cycle

    def _admissible(self, other: ElectionState) -> bool:
        return self.sim_fn(other.candidate, other.candidate_profile) >= self.config.tau_adopt


def _with_heartbeat(st: ElectionState, heartbeat: int) -> ElectionState:
    return ElectionState(
        st.candidate, st.candidate_profile, st.candidate_score, st.epoch, heartbeat,
        st.prior, st.prior_profile,
    )
