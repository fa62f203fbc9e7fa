"""Run the 500-peer, 5-cluster reference spec over seeds 1..5 and store the baseline.

Usage: python3 scripts/run_reference.py [--out baselines/reference.json] [--seeds 1 2 3 4 5]
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from atlaas.experiment import DEFAULT_SEEDS, aggregate, reference_config, run_replication


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "baselines" / "reference.json"))
    ap.add_argument("--seeds", type=int, nargs="+", default=list(DEFAULT_SEEDS))
    args = ap.parse_args()
    rows = []
    for seed in args.seeds:
        t0 = time.perf_counter()
        row, _ = run_replication(reference_config(seed))
        row["seconds"] = round(time.perf_counter() - t0, 1)
        rows.append(row)
        print(
            f"seed {seed}: recall {row['recall']:.3f}  peers ratio {row['peers_contacted_ratio']:.3f}  "
            f"flood recall {row['flood_recall']:.3f}  ({row['seconds']} s)",
            flush=True,
        )
    agg = aggregate(rows)
    out = {
        "spec": "reference_config",
        "config": reference_config(args.seeds[0]).to_dict(),
        "seeds": args.seeds,
        "rows": rows,
        "aggregate": agg,
    }
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"recall {agg['recall']['mean']:.3f}  peers ratio {agg['peers_contacted_ratio']['mean']:.3f}")


if __name__ == "__main__":
    main()
