"""Experiment specs, replications, sweeps and the summary fold used by the CLI.

A replication writes three files into its directory:

``metrics.jsonl``
    one metrics frame per cycle, written as the run progresses
``queries.jsonl``
    one record per resolved query (also embedded in the frames)
``summary.json``
    the folded summary row plus the seed and config

Every summary number is a pure function of the query records, so
:func:`summarize` can rebuild it from ``queries.jsonl`` alone.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
import os
from dataclasses import dataclass, field, is_dataclass
from pathlib import Path
from statistics import fmean
from typing import Any, Iterable, Sequence

from .metrics import bootstrap_ci
from .profiles import ParameterError
from .sim import SimConfig, Simulator, WorkloadConfig, run
from .datasets import DatasetConfig

DEFAULT_SEEDS = (1, 2, 3, 4, 5)


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    sim: SimConfig = field(default_factory=SimConfig)
    # dotted parameter path -> values, e.g. {"workload.ttl": [1, 2, 3]}
    sweep: dict[str, list] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))

    def validate(self) -> None:
        self.sim.validate()
        if not self.seeds:
            self.seeds = list(DEFAULT_SEEDS)
        if len(set(self.seeds)) != len(self.seeds):
            raise ParameterError("replication seeds must be distinct")
        for path, values in self.sweep.items():
            get_param(self.sim, path)
            if not values:
                raise ParameterError(f"sweep axis {path} has no values")

    def to_dict(self) -> dict:
        return {"name": self.name, "sim": self.sim.to_dict(), "sweep": self.sweep, "seeds": list(self.seeds)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        unknown = set(data) - {"name", "sim", "sweep", "seeds"}
        if unknown:
            raise ParameterError(f"unknown spec fields: {sorted(unknown)}")
        return cls(
            name=data.get("name", "experiment"),
            sim=SimConfig.from_dict(data.get("sim", {})),
            sweep={k: list(v) for k, v in data.get("sweep", {}).items()},
            seeds=list(data.get("seeds") or DEFAULT_SEEDS),
        )

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def get_param(config: Any, path: str) -> Any:
    obj = config
    for part in path.split("."):
        if not is_dataclass(obj) or not hasattr(obj, part):
            raise ParameterError(f"unknown parameter {path!r}")
        obj = getattr(obj, part)
    return obj


def set_param(config: Any, path: str, value: Any) -> None:
    parts = path.split(".")
    obj = config
    for part in parts[:-1]:
        obj = get_param(obj, part)
    get_param(obj, parts[-1])
    setattr(obj, parts[-1], value)


# -- reference specs ---------------------------------------------------------------------


def reference_config(seed: int = 1) -> SimConfig:
    """500 peers in 5 planted clusters, 100 queries with a flood baseline after convergence."""
    return SimConfig(
        n_peers=500,
        seed=seed,
        cycles=66,
        dataset=DatasetConfig(n_clusters=5),
        quality_every=5,
        workload=WorkloadConfig(
            n_queries=100, per_cycle=10, start_cycle=55, ttl=4, max_probe_radius=3, flood_baseline=True
        ),
    )


def paper_scale_config(seed: int = 1) -> SimConfig:
    """200 labels, 5000 Zipf-assigned peers, 100 cycles, no churn."""
    return SimConfig(n_peers=5000, seed=seed, cycles=100, quality_every=10)


def smoke_config(seed: int = 1) -> SimConfig:
    return SimConfig(n_peers=1, seed=seed, cycles=10)


# -- summaries ------------------------------------------------------------------------------


def _mean(values: Sequence[float]) -> float | None:
    return fmean(values) if values else None


def summarize(records: Iterable[dict]) -> dict:
    """Fold per-query records into one summary row."""
    records = list(records)
    two = [r for r in records if r["strategy"] == "two-layer"]
    flood = {r["paired"]: r for r in records if r["strategy"] == "flood"}
    row: dict[str, Any] = {
        "queries": len(two),
        "recall": _mean([r["recall"] for r in two]),
        "messages": _mean([r["cost"]["messages"] for r in two]),
        "comparisons": _mean([r["cost"]["comparisons"] for r in two]),
        "peers_contacted": _mean([r["cost"]["peers_contacted"] for r in two]),
        "dht_hops": _mean([r["cost"]["dht_hops"] for r in two]),
        "no_representatives": sum("no-representatives" in r["flags"] for r in two),
    }
    if flood:
        paired = [(r, flood[r["qid"]]) for r in two if r["qid"] in flood]
        fl = [f for _, f in paired]
        row.update(
            flood_recall=_mean([f["recall"] for f in fl]),
            flood_messages=_mean([f["cost"]["messages"] for f in fl]),
            flood_comparisons=_mean([f["cost"]["comparisons"] for f in fl]),
            flood_peers_contacted=_mean([f["cost"]["peers_contacted"] for f in fl]),
        )
        for key in ("messages", "comparisons", "peers_contacted"):
            a, b = row[key], row[f"flood_{key}"]
            row[f"{key}_ratio"] = a / b if a is not None and b else None
    return row


def aggregate(rows: Sequence[dict], seed: int = 0) -> dict:
    """Mean and 95% bootstrap interval of every numeric column across replications."""
    out: dict[str, Any] = {"replications": len(rows)}
    keys = [k for k in rows[0] if isinstance(rows[0][k], (int, float)) and k != "seed"] if rows else []
    for key in keys:
        vals = [r[key] for r in rows if isinstance(r.get(key), (int, float))]
        mean, lo, hi = bootstrap_ci(vals, seed=seed)
        out[key] = {"mean": mean, "lo": lo, "hi": hi}
    return out


# -- running ----------------------------------------------------------------------------------


def _write_json(path: Path, data: Any) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_replication(config: SimConfig, out_dir: str | os.PathLike | None = None) -> tuple[dict, Simulator]:
    """Run one seeded simulation; if ``out_dir`` is given, stream its records there."""
    records: list[dict] = []
    metrics_fh = queries_fh = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics_fh = open(out / "metrics.jsonl", "w")
        queries_fh = open(out / "queries.jsonl", "w")

    def on_frame(frame) -> None:
        records.extend(frame.queries)
        if metrics_fh is not None:
            metrics_fh.write(json.dumps(frame.to_record(), sort_keys=True) + "\n")
            metrics_fh.flush()
            for q in frame.queries:
                queries_fh.write(json.dumps(q, sort_keys=True) + "\n")
            queries_fh.flush()

    try:
        sim = run(config, on_frame=on_frame)
    finally:
        if metrics_fh is not None:
            metrics_fh.close()
            queries_fh.close()
    row = dict(summarize(records), seed=config.seed)
    last = sim.frames[-1]
    row.update(
        final_cycle=last.cycle,
        alive=last.alive,
        n_representatives=last.n_representatives,
        n_communities=last.n_communities,
        mean_view_quality=next((f.mean_view_quality for f in reversed(sim.frames) if f.mean_view_quality is not None), None),
        sent=sim.sent,
        delivered=sim.delivered,
        dropped=sim.dropped,
    )
    if out_dir is not None:
        _write_json(Path(out_dir) / "summary.json", {"seed": config.seed, "summary": row, "config": config.to_dict()})
    return row, sim


def cells(spec: ExperimentSpec) -> list[dict[str, Any]]:
    """Cartesian product of the sweep axes in a stable order (axes sorted by name)."""
    axes = sorted(spec.sweep)
    return [dict(zip(axes, combo)) for combo in itertools.product(*(spec.sweep[a] for a in axes))]


def cell_config(spec: ExperimentSpec, cell: dict[str, Any], seed: int) -> SimConfig:
    cfg = copy.deepcopy(spec.sim)
    for path, value in cell.items():
        set_param(cfg, path, value)
    cfg.seed = seed
    cfg.validate()
    return cfg


def cell_label(cell: dict[str, Any]) -> str:
    return ",".join(f"{k}={v}" for k, v in cell.items()) or "base"


def run_spec(spec: ExperimentSpec, out_dir: str | os.PathLike | None = None) -> list[dict]:
    """Run every sweep cell times every seed; one summary row each, in a fixed order."""
    spec.validate()
    rows = []
    for index, cell in enumerate(cells(spec)):
        for seed in spec.seeds:
            cfg = cell_config(spec, cell, seed)
            sub = None
            if out_dir is not None:
                sub = Path(out_dir) / (f"cell{index:03d}" if spec.sweep else "") / f"seed{seed}"
            row, _ = run_replication(cfg, sub)
            rows.append({"cell": cell_label(cell), **{k: v for k, v in cell.items()}, **row})
    return rows


def load_records(path: str | os.PathLike) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def report(root: str | os.PathLike) -> list[dict]:
    """Recompute one summary row per ``queries.jsonl`` found under ``root``."""
    rows = []
    for qfile in sorted(Path(root).rglob("queries.jsonl")):
        summary_file = qfile.with_name("summary.json")
        seed = None
        if summary_file.exists():
            with open(summary_file) as fh:
                seed = json.load(fh).get("seed")
        rows.append({"run": str(qfile.parent.relative_to(root)) or ".", "seed": seed, **summarize(load_records(qfile))})
    return rows


def format_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    def fmt(v: Any) -> str:
        if isinstance(v, float):
            return "nan" if math.isnan(v) else f"{v:.4g}"
        return "-" if v is None else str(v)

    table = [list(columns)] + [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in table)
