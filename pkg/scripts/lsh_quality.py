"""Recall@3 of the simhash index as a function of signature width and probe radius.

Same setup as acceptance criterion 5 (2000 Zipf peers, 200 DHT nodes, 20
descriptors, 50 perturbed samples per seed), swept over ``bits`` and ``radius``.
Writes ``baselines/lsh_quality.json``.

Usage: python3 scripts/lsh_quality.py [--bits 8 12 16] [--radii 0 1 2 3] [--seeds 1 2 3 4 5]
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
from pathlib import Path

import numpy as np

from atlaas.datasets import DatasetConfig, build_dataset
from atlaas.dht import DHTConfig, DHTNetwork, make_record
from atlaas.profiles import brute_force_top_k, similarity


def recall_by_radius(seed: int, bits: int, radii: list[int], n_desc: int = 20, n_queries: int = 50) -> tuple[dict, float]:
    ds = build_dataset(DatasetConfig(), 2000, seed)
    net = DHTNetwork(range(200), DHTConfig(bits=bits, hyperplane_seed=seed), n_labels=len(ds.taxonomy))
    net.bootstrap_full(random.Random(seed))
    rng = random.Random(seed)
    owners = rng.sample(range(len(ds.profiles)), n_desc)
    descriptors = [(rep, ds.profiles[pid]) for rep, pid in enumerate(owners)]
    for rep, prof in descriptors:
        net.register_representative(make_record(rep, prof, net.hasher, epoch=0))
    qrng = np.random.default_rng(seed)
    out: dict[int, list[float]] = {r: [] for r in radii}
    top_sims = []
    for _ in range(n_queries):
        origin = rng.randrange(len(ds.profiles))
        sample = ds.expand(ds.perturb(ds.labels[origin], ds.membership[origin], qrng), ds.membership[origin])
        top = brute_force_top_k(sample, descriptors, 3)
        top_sims.extend(similarity(sample, dict(descriptors)[rep]) for rep, _ in top)
        oracle = {rep for rep, _ in top}
        entry = rng.randrange(200)
        for r in radii:
            res = net.approx_search(entry, sample, 3, radius=r)
            out[r].append(len(oracle & {rec.representative for rec in res.records}) / 3)
    return {r: statistics.mean(v) for r, v in out.items()}, statistics.mean(top_sims)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bits", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--radii", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "baselines" / "lsh_quality.json"))
    args = ap.parse_args()
    table = []
    for bits in args.bits:
        runs = [recall_by_radius(seed, bits, args.radii) for seed in args.seeds]
        row = {"bits": bits, "top3_cosine": statistics.mean(s for _, s in runs)}
        for r in args.radii:
            row[f"r{r}"] = statistics.mean(rec[r] for rec, _ in runs)
        table.append(row)
        print("  ".join(f"{k} {v:.3f}" if isinstance(v, float) else f"{k} {v}" for k, v in row.items()), flush=True)
    Path(args.out).write_text(json.dumps({"seeds": args.seeds, "rows": table}, indent=2) + "\n")


if __name__ == "__main__":
    main()
