"""One 5000-peer, 200-label Zipf run for 100 cycles; stores a per-frame trace.

Writes ``baselines/paper_scale.json``: wall time plus, for every frame with a
quality sample, the mean view quality, representative and community counts.

Usage: python3 scripts/paper_scale.py [--seed 1]
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from atlaas.experiment import paper_scale_config
from atlaas.sim import run


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "baselines" / "paper_scale.json"))
    args = ap.parse_args()
    cfg = paper_scale_config(args.seed)
    trace = []

    def on_frame(frame) -> None:
        if frame.mean_view_quality is not None:
            row = {
                "cycle": frame.cycle,
                "mean_view_quality": round(frame.mean_view_quality, 4),
                "n_representatives": frame.n_representatives,
                "n_communities": frame.n_communities,
            }
            trace.append(row)
            print(row, flush=True)

    t0 = time.perf_counter()
    sim = run(cfg, on_frame=on_frame)
    elapsed = time.perf_counter() - t0
    out = {"seed": args.seed, "seconds": round(elapsed, 1), "sent": sim.sent, "trace": trace, "config": cfg.to_dict()}
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    print(f"{elapsed:.0f} s, {sim.sent} messages")


if __name__ == "__main__":
    main()
