"""Ground-truth oracles and summary statistics.

:class:`PopulationIndex` answers exact top-k queries over a whole population.
A dense matrix product shortlists candidates, then every candidate within a
small margin of the cut-off is re-scored with :func:`similarity` so that ties
and rounding resolve exactly as in :func:`brute_force_top_k`.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .profiles import Profile, brute_force_top_k, similarity

_MARGIN = 1e-9


class PopulationIndex:
    def __init__(self, members: Sequence[tuple[int, Profile]], n_labels: int):
        self.pids = [pid for pid, _ in members]
        self.profiles = [p for _, p in members]
        self.pos = {pid: i for i, pid in enumerate(self.pids)}
        mat = np.zeros((len(members), n_labels))
        for i, prof in enumerate(self.profiles):
            for k, w in prof.weights.items():
                mat[i, k] = w / prof.norm
        self.matrix = mat

    def __len__(self) -> int:
        return len(self.pids)

    def _exact(self, sample: Profile, rows: Iterable[int], k: int) -> list[tuple[int, float]]:
        scored = [(self.pids[i], similarity(sample, self.profiles[i])) for i in rows]
        scored.sort(key=lambda t: (-t[1], t[0]))
        return scored[:k]

    def _select(self, scores: np.ndarray, k: int, exclude: int | None) -> np.ndarray:
        if exclude is not None:
            scores = scores.copy()
            scores[exclude] = -np.inf
        n_valid = len(scores) - (exclude is not None)
        if n_valid <= 0:
            return np.array([], dtype=int)
        if k >= n_valid:
            rows = np.flatnonzero(np.isfinite(scores))
            return rows
        cut = np.partition(scores, len(scores) - k)[len(scores) - k]
        return np.flatnonzero(scores >= cut - _MARGIN)

    def top_k(self, sample: Profile, k: int, exclude: int | None = None) -> list[tuple[int, float]]:
        if len(self.pids) <= 64:
            pop = [(p, q) for p, q in zip(self.pids, self.profiles) if p != exclude]
            return brute_force_top_k(sample, pop, k) if pop else []
        vec = np.zeros(self.matrix.shape[1])
        for lab, w in sample.weights.items():
            vec[lab] = w / sample.norm
        ex = self.pos.get(exclude) if exclude is not None else None
        rows = self._select(self.matrix @ vec, k, ex)
        return self._exact(sample, rows, k)

    def all_neighbors(self, k: int, chunk: int = 512) -> dict[int, list[tuple[int, float]]]:
        """Exact top-k of every member against the rest of the population."""
        out: dict[int, list[tuple[int, float]]] = {}
        n = len(self.pids)
        if n <= 64:
            for i, pid in enumerate(self.pids):
                out[pid] = self.top_k(self.profiles[i], k, exclude=pid)
            return out
        for start in range(0, n, chunk):
            block = self.matrix[start : start + chunk] @ self.matrix.T
            for r in range(block.shape[0]):
                i = start + r
                rows = self._select(block[r], k, i)
                out[self.pids[i]] = self._exact(self.profiles[i], rows, k)
        return out


def recall(found: Iterable[int], oracle: Sequence[tuple[int, float]] | Sequence[int]) -> float:
    """Fraction of the oracle set present in ``found`` (1.0 for an empty oracle)."""
    ids = {o[0] if isinstance(o, tuple) else o for o in oracle}
    if not ids:
        return 1.0
    return len(ids & set(found)) / len(ids)


def bootstrap_ci(
    values: Sequence[float], level: float = 0.95, n_boot: int = 2000, seed: int = 0
) -> tuple[float, float, float]:
    """Mean with a percentile bootstrap confidence interval."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return (float("nan"), float("nan"), float("nan"))
    rng = np.random.default_rng(seed)
    means = rng.choice(arr, size=(n_boot, arr.size), replace=True).mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(arr.mean()), float(lo), float(hi)
