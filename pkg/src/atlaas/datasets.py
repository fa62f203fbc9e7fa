"""Peer populations built from a synthetic taxonomy.

Two shapes are supported. The unclustered shape draws every peer's labels
from one Zipf ranking over all leaves. The planted shape splits the taxonomy
into disjoint subtrees; a peer of cluster ``c`` carries the cluster's core
labels at full weight plus its own Zipf-drawn labels from the same subtree at
``free_weight``, which keeps clusters internally tight and mutually distant.

A :class:`Dataset` remembers each peer's drawn labels so that query samples
(one label resampled) and churn arrivals come from the same generator as the
initial population.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .profiles import (
    ParameterError,
    Profile,
    Taxonomy,
    ZipfAssignment,
    cluster_roots,
    expand_profile,
    generate_taxonomy,
)


@dataclass
class DatasetConfig:
    n_labels: int = 200
    branching: tuple[int, int] = (2, 5)
    zipf_s: float = 1.0
    labels_per_peer: int = 3
    decay: float = 0.5
    # 0 means one Zipf ranking over all leaves; otherwise peers are dealt
    # round-robin into this many planted clusters
    n_clusters: int = 0
    core_labels: int = 2
    free_weight: float = 0.5
    # each drawn label's weight is free_weight * U(1 - j, 1 + j); breaks exact score ties
    weight_jitter: float = 0.4
    taxonomy_seed: int = 7

    def __post_init__(self) -> None:
        self.branching = tuple(self.branching)


@dataclass
class Dataset:
    config: DatasetConfig
    taxonomy: Taxonomy
    zipfs: list[ZipfAssignment]
    # per group: labels every member carries at weight 1
    cores: list[tuple[int, ...]] = field(default_factory=list)
    # per peer: drawn (label, weight) pairs
    labels: list[list[tuple[int, float]]] = field(default_factory=list)
    profiles: list[Profile] = field(default_factory=list)
    membership: list[int] = field(default_factory=list)

    @property
    def planted(self) -> bool:
        return self.config.n_clusters > 0

    def _weight(self, rng: np.random.Generator) -> float:
        if not self.planted:
            return 1.0
        j = self.config.weight_jitter
        w = self.config.free_weight
        return w * float(rng.uniform(1 - j, 1 + j)) if j else w

    def _draw(self, rng: np.random.Generator, group: int) -> list[tuple[int, float]]:
        z = self.zipfs[group]
        labels = z.draw_labels(rng, min(self.config.labels_per_peer, len(z.ranked_labels)))
        return [(lab, self._weight(rng)) for lab in labels]

    def expand(self, labels: list[tuple[int, float]], group: int = 0) -> Profile:
        core = [(lab, 1.0) for lab in self.cores[group]] if self.planted else []
        return expand_profile(core + list(labels), self.taxonomy, self.config.decay)

    def new_peer(self, rng: np.random.Generator, index: int) -> tuple[list[tuple[int, float]], Profile, int]:
        group = index % len(self.zipfs)
        labels = self._draw(rng, group)
        return labels, self.expand(labels, group), group

    def perturb(
        self, labels: list[tuple[int, float]], group: int, rng: np.random.Generator
    ) -> list[tuple[int, float]]:
        """Replace one drawn label with a fresh Zipf draw that is not already present.

        The replacement keeps the weight of the slot it fills.
        """
        z = self.zipfs[group]
        if len(z.ranked_labels) <= len(labels):
            return list(labels)
        out = list(labels)
        slot = int(rng.integers(len(out)))
        probs = z.probabilities.copy()
        rank = {lab: r for r, lab in enumerate(z.ranked_labels)}
        probs[[rank[lab] for lab, _ in out]] = 0.0
        probs /= probs.sum()
        out[slot] = (z.ranked_labels[int(rng.choice(len(probs), p=probs))], out[slot][1])
        return out


def build_dataset(config: DatasetConfig, n_peers: int, seed: int) -> Dataset:
    if n_peers < 1:
        raise ParameterError("n_peers must be >= 1")
    if not 0.0 < config.free_weight:
        raise ParameterError("free_weight must be > 0")
    if not 0.0 <= config.weight_jitter < 1.0:
        raise ParameterError("weight_jitter must lie in [0, 1)")
    tax = generate_taxonomy(config.taxonomy_seed, config.n_labels, config.branching)
    cores: list[tuple[int, ...]] = []
    if config.n_clusters:
        zipfs = []
        for i, root in enumerate(cluster_roots(tax, config.n_clusters)):
            leaves = tax.subtree_leaves(root)
            random.Random(config.taxonomy_seed * 7919 + i).shuffle(leaves)
            core, rest = tuple(leaves[: config.core_labels]), tuple(leaves[config.core_labels :])
            if len(rest) < config.labels_per_peer:
                raise ParameterError(f"cluster {i} has {len(leaves)} leaves, too few for its core and draws")
            cores.append(core)
            zipfs.append(ZipfAssignment(config.zipf_s, rest))
    else:
        zipfs = [ZipfAssignment.for_taxonomy(tax, config.zipf_s, config.taxonomy_seed)]
        if len(zipfs[0].ranked_labels) < config.labels_per_peer:
            raise ParameterError(
                f"taxonomy has {len(zipfs[0].ranked_labels)} leaves, need {config.labels_per_peer}"
            )
    ds = Dataset(config, tax, zipfs, cores)
    rng = np.random.default_rng(seed)
    for i in range(n_peers):
        labels, prof, group = ds.new_peer(rng, i)
        ds.labels.append(labels)
        ds.profiles.append(prof)
        ds.membership.append(group)
    return ds
