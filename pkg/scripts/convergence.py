"""Mean similar-view quality per cycle for a range of network sizes.

Writes ``baselines/convergence.json`` with one curve per size (mean over seeds)
and the first cycle at which every seed reached quality 1.0, if any.

Usage: python3 scripts/convergence.py [--sizes 10 20 50 100 200] [--cycles 60] [--seeds 1 2 3]
"""

from __future__ import annotations

import argparse
import json
import statistics
from pathlib import Path

from atlaas.sim import SimConfig, Simulator


def curve(n: int, seed: int, cycles: int) -> list[float]:
    sim = Simulator(SimConfig(n_peers=n, seed=seed, cycles=cycles))
    out = []
    for cycle in range(cycles):
        sim.run_to_cycle(cycle + 1)
        out.append(sim.mean_view_quality())
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 50, 100, 200])
    ap.add_argument("--cycles", type=int, default=60)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "baselines" / "convergence.json"))
    args = ap.parse_args()
    result = {"seeds": args.seeds, "cycles": args.cycles, "sizes": {}}
    for n in args.sizes:
        curves = [curve(n, seed, args.cycles) for seed in args.seeds]
        mean = [statistics.mean(c[i] for c in curves) for i in range(args.cycles)]
        exact = next((i for i in range(args.cycles) if all(c[i] == 1.0 for c in curves)), None)
        result["sizes"][str(n)] = {"mean_quality": [round(q, 4) for q in mean], "exact_at": exact}
        marks = "  ".join(f"c{i}={mean[i]:.3f}" for i in (4, 9, 19, 39) if i < args.cycles)
        print(f"n={n}: {marks}  exact at {exact}", flush=True)
    Path(args.out).write_text(json.dumps(result, indent=2) + "\n")


if __name__ == "__main__":
    main()
