"""Taxonomies, resource profiles and the cosine similarity that drives every layer.

A profile is a sparse, non-negative weight vector over taxonomy labels. Labels
are expanded towards the root with a geometric decay so that taxonomically close
labels end up with overlapping supports.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when an operation receives arguments outside its domain."""


@dataclass(frozen=True)
class Taxonomy:
    """Rooted labeled tree. ``parents[i]`` is ``None`` only for the root."""

    parents: tuple[int | None, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.parents)
        if n == 0 or len(self.names) != n:
            raise ParameterError("taxonomy needs at least one node and one name per node")
        roots = [i for i, p in enumerate(self.parents) if p is None]
        if len(roots) != 1:
            raise ParameterError(f"taxonomy must have exactly one root, found {len(roots)}")
        if len(set(self.names)) != n:
            raise ParameterError("taxonomy names must be unique")
        for i, p in enumerate(self.parents):
            if p is not None and not 0 <= p < n:
                raise ParameterError(f"node {i} has unknown parent {p}")
        # every node must reach the root without revisiting a node
        for i in range(n):
            seen = 0
            node: int | None = i
            while node is not None:
                node = self.parents[node]
                seen += 1
                if seen > n:
                    raise ParameterError("taxonomy contains a cycle")

    def __len__(self) -> int:
        return len(self.parents)

    @property
    def root(self) -> int:
        return self.parents.index(None)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.parents]
        for i, p in enumerate(self.parents):
            if p is not None:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.children) if not k)

    def ancestors(self, label: int) -> list[int]:
        """The label itself followed by its ancestors up to the root."""
        chain = []
        node: int | None = label
        while node is not None:
            chain.append(node)
            node = self.parents[node]
        return chain

    def depth(self, label: int) -> int:
        return len(self.ancestors(label)) - 1

    @cached_property
    def height(self) -> int:
        return max(self.depth(i) for i in range(len(self)))

    def subtree_leaves(self, label: int) -> list[int]:
        out, stack = [], [label]
        while stack:
            node = stack.pop()
            kids = self.children[node]
            if kids:
                stack.extend(reversed(kids))
            else:
                out.append(node)
        return sorted(out)


def generate_taxonomy(seed: int, n_labels: int, branching: tuple[int, int] = (2, 5)) -> Taxonomy:
    """Grow a random tree breadth-first until it has exactly ``n_labels`` nodes."""
    lo, hi = branching
    if n_labels < 1:
        raise ParameterError("n_labels must be >= 1")
    if not 1 <= lo <= hi:
        raise ParameterError(f"invalid branching range {branching}")
    rng = random.Random(seed)
    parents: list[int | None] = [None]
    frontier = [0]
    head = 0
    while len(parents) < n_labels:
        node = frontier[head]
        head += 1
        for _ in range(rng.randint(lo, hi)):
            if len(parents) == n_labels:
                break
            parents.append(node)
            frontier.append(len(parents) - 1)
    names = tuple(f"domain-{i:04d}" for i in range(n_labels))
    return Taxonomy(tuple(parents), names)


@dataclass(frozen=True, eq=False)
class Profile:
    """Sparse non-negative weight vector; keys are stored in ascending order."""

    weights: Mapping[int, float]
    norm: float = field(default=0.0)

    def __post_init__(self) -> None:
        if not self.weights:
            raise ParameterError("a profile must be non-empty")
        ordered = {}
        for k in sorted(self.weights):
            w = float(self.weights[k])
            if not w > 0.0:
                raise ParameterError(f"weight for label {k} must be > 0, got {w}")
            ordered[int(k)] = w
        object.__setattr__(self, "weights", ordered)
        object.__setattr__(self, "norm", math.sqrt(sum(w * w for w in ordered.values())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Profile) and self.weights == other.weights

    def __hash__(self) -> int:
        return hash(tuple(self.weights.items()))

    def __len__(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}:{w:.4g}" for k, w in self.weights.items())
        return f"Profile({{{body}}})"

    def scaled(self, alpha: float) -> "Profile":
        return Profile({k: w * alpha for k, w in self.weights.items()})

    def normalized(self) -> "Profile":
        return Profile({k: w / self.norm for k, w in self.weights.items()})

    def dense(self, n_labels: int) -> np.ndarray:
        vec = np.zeros(n_labels)
        for k, w in self.weights.items():
            vec[k] = w
        return vec


def expand_profile(
    labels: Iterable[tuple[int, float]], taxonomy: Taxonomy, decay: float = 0.5
) -> Profile:
    """Spread each label's weight to its ancestors (``weight * decay**d``) and unit-normalize."""
    labels = list(labels)
    if not labels:
        raise ParameterError("empty label list")
    if not 0.0 < decay <= 1.0:
        raise ParameterError(f"decay must be in (0, 1], got {decay}")
    acc: dict[int, float] = {}
    for label, weight in labels:
        if not 0 <= label < len(taxonomy):
            raise ParameterError(f"unknown label id {label}")
        if not weight > 0:
            raise ParameterError(f"weight for label {label} must be > 0")
        contrib = float(weight)
        for anc in taxonomy.ancestors(label):
            acc[anc] = acc.get(anc, 0.0) + contrib
            contrib *= decay
    return Profile(acc).normalized()


def similarity(p: Profile, q: Profile) -> float:
    """Cosine similarity of two profiles.

    Both weight maps are key-sorted, so iterating the smaller one visits the
    shared labels in the same order whichever argument comes first; the result
    is exactly symmetric.
    """
    a, b = p.weights, q.weights
    if len(a) > len(b):
        a, b = b, a
    elif len(a) == len(b) and a == b:
        return 1.0
    dot = 0.0
    for k, w in a.items():
        v = b.get(k)
        if v is not None:
            dot += w * v
    return dot / (p.norm * q.norm)


@dataclass(frozen=True)
class ZipfAssignment:
    exponent: float
    ranked_labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise ParameterError("Zipf exponent must be > 0")
        if not self.ranked_labels:
            raise ParameterError("Zipf assignment needs at least one label")

    @classmethod
    def for_taxonomy(cls, taxonomy: Taxonomy, exponent: float = 1.0, seed: int = 0) -> "ZipfAssignment":
        """Rank the taxonomy leaves by a seeded random permutation."""
        leaves = list(taxonomy.leaves)
        random.Random(seed).shuffle(leaves)
        return cls(exponent, tuple(leaves))

    @cached_property
    def probabilities(self) -> np.ndarray:
        ranks = np.arange(1, len(self.ranked_labels) + 1, dtype=float)
        w = ranks ** (-self.exponent)
        return w / w.sum()

    def sample_ranks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """1-based ranks drawn independently (with replacement)."""
        return rng.choice(len(self.ranked_labels), size=size, p=self.probabilities) + 1

    def draw_labels(self, rng: np.random.Generator, count: int) -> list[int]:
        """``count`` distinct labels, Zipf-weighted, without replacement."""
        if count > len(self.ranked_labels):
            raise ParameterError(
                f"cannot draw {count} distinct labels from {len(self.ranked_labels)}"
            )
        idx = rng.choice(len(self.ranked_labels), size=count, replace=False, p=self.probabilities)
        return [self.ranked_labels[i] for i in idx]


def assign_profiles(
    n_peers: int,
    taxonomy: Taxonomy,
    zipf: ZipfAssignment,
    labels_per_peer: int = 3,
    seed: int = 0,
    decay: float = 0.5,
) -> list[Profile]:
    if n_peers < 1:
        raise ParameterError("n_peers must be >= 1")
    if labels_per_peer < 1:
        raise ParameterError("labels_per_peer must be >= 1")
    if len(zipf.ranked_labels) < labels_per_peer:
        raise ParameterError(
            f"taxonomy has {len(zipf.ranked_labels)} leaves, need {labels_per_peer}"
        )
    rng = np.random.default_rng(seed)
    return [
        expand_profile([(lab, 1.0) for lab in zipf.draw_labels(rng, labels_per_peer)], taxonomy, decay)
        for _ in range(n_peers)
    ]


def cluster_roots(taxonomy: Taxonomy, n_clusters: int) -> list[int]:
    """Pick ``n_clusters`` disjoint subtrees by repeatedly splitting the largest one."""
    frontier = [taxonomy.root]
    while len(frontier) < n_clusters:
        splittable = [x for x in frontier if taxonomy.children[x]]
        if not splittable:
            raise ParameterError(f"taxonomy cannot host {n_clusters} disjoint clusters")
        big = max(splittable, key=lambda x: (len(taxonomy.subtree_leaves(x)), -x))
        frontier.remove(big)
        frontier.extend(taxonomy.children[big])
    frontier.sort(key=lambda x: (-len(taxonomy.subtree_leaves(x)), x))
    return sorted(frontier[:n_clusters])


def brute_force_top_k(
    sample: Profile, population: Sequence[tuple[int, Profile]], k: int
) -> list[tuple[int, float]]:
    """Exact top-k by similarity; ties go to the smaller peer id."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    scored = [(pid, similarity(sample, prof)) for pid, prof in population]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


# --- text serialization -------------------------------------------------------


def dump_taxonomy(taxonomy: Taxonomy) -> str:
    lines = [f"taxonomy {len(taxonomy)}"]
    for i, (p, name) in enumerate(zip(taxonomy.parents, taxonomy.names)):
        lines.append(f"{i} {'-' if p is None else p} {name}")
    return "\n".join(lines) + "\n"


def load_taxonomy(text: str) -> Taxonomy:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "taxonomy":
        raise ParameterError(f"bad taxonomy header: {lines[0]!r}")
    n = int(head[1])
    if len(lines) - 1 != n:
        raise ParameterError(f"taxonomy header says {n} nodes, found {len(lines) - 1}")
    parents: list[int | None] = [None] * n
    names = [""] * n
    for ln in lines[1:]:
        ident, parent, name = ln.split(maxsplit=2)
        i = int(ident)
        parents[i] = None if parent == "-" else int(parent)
        names[i] = name
    return Taxonomy(tuple(parents), tuple(names))


def dump_profiles(profiles: Sequence[tuple[int, Profile]]) -> str:
    lines = [f"profiles {len(profiles)}"]
    for pid, prof in profiles:
        # repr() round-trips floats exactly
        body = " ".join(f"{k}:{w!r}" for k, w in prof.weights.items())
        lines.append(f"{pid} {body}")
    return "\n".join(lines) + "\n"


def load_profiles(text: str) -> list[tuple[int, Profile]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "profiles":
        raise ParameterError(f"bad profiles header: {lines[0]!r}")
    out = []
    for ln in lines[1:]:
        pid, *pairs = ln.split()
        weights = {}
        for pair in pairs:
            k, w = pair.split(":")
            weights[int(k)] = float(w)
        out.append((int(pid), Profile(weights)))
    if len(out) != int(head[1]):
        raise ParameterError(f"profiles header says {head[1]}, found {len(out)}")
    return out
