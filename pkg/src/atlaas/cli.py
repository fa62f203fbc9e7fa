"""Command line entry point: ``atlaas gen-dataset | run | sweep | report``.

Outputs go under ``--out`` or, when it is omitted, under ``$ATLAAS_OUT``
(default ``./atlaas-out``). Validation failures and unwritable paths exit
with status 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

from . import experiment as ex
from .datasets import DatasetConfig, build_dataset
from .profiles import ParameterError, dump_profiles, dump_taxonomy, generate_taxonomy

EXIT_INVALID = 2

SUMMARY_COLUMNS = ("seed", "queries", "recall", "messages", "comparisons", "peers_contacted", "n_representatives")
FLOOD_COLUMNS = ("flood_recall", "messages_ratio", "comparisons_ratio", "peers_contacted_ratio")


class UsageError(Exception):
    pass


def _out_dir(args: argparse.Namespace, default_name: str) -> Path:
    base = args.out or os.environ.get("ATLAAS_OUT") or "atlaas-out"
    path = Path(base)
    if args.out is None:
        path = path / default_name
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as err:
        raise UsageError(f"cannot write to {path}: {err.strerror or err}") from err
    return path


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_axis(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise UsageError(f"axis {text!r} must look like name=v1,v2")
    name, _, values = text.partition("=")
    items = [_parse_value(v) for v in values.split(",") if v.strip()]
    if not items:
        raise UsageError(f"axis {name} has an empty value list")
    return name.strip(), items


# -- shared spec flags --------------------------------------------------------------------------

_OVERRIDES = {
    "peers": "n_peers",
    "cycles": "cycles",
    "labels": "dataset.n_labels",
    "zipf_s": "dataset.zipf_s",
    "labels_per_peer": "dataset.labels_per_peer",
    "clusters": "dataset.n_clusters",
    "queries": "workload.n_queries",
    "k": "workload.k",
    "m": "workload.m",
    "ttl": "workload.ttl",
    "fanout": "workload.fanout",
    "theta": "workload.theta",
    "join_rate": "churn.join_rate",
    "leave_rate": "churn.leave_rate",
}


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="experiment spec (JSON); flags below override it")
    p.add_argument("--reference", action="store_true", help="start from the 500-peer reference spec")
    p.add_argument("--seed", type=int, action="append", dest="seeds", help="replication seed (repeatable)")
    p.add_argument("--peers", type=int)
    p.add_argument("--cycles", type=int)
    p.add_argument("--labels", type=int)
    p.add_argument("--zipf-s", type=float)
    p.add_argument("--labels-per-peer", type=int)
    p.add_argument("--branching", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--clusters", type=int)
    p.add_argument("--queries", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--ttl", type=int)
    p.add_argument("--fanout", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--join-rate", type=float)
    p.add_argument("--leave-rate", type=float)
    p.add_argument("--baseline", choices=["flood"], help="also resolve every query by global flooding")
    p.add_argument("--set", action="append", default=[], metavar="PATH=VALUE", help="override any config field")
    p.add_argument("--out", help="output directory (default: $ATLAAS_OUT)")


def _build_spec(args: argparse.Namespace) -> ex.ExperimentSpec:
    if args.spec:
        try:
            spec = ex.ExperimentSpec.load(args.spec)
        except OSError as err:
            raise UsageError(f"cannot read spec {args.spec}: {err.strerror}") from err
        except (json.JSONDecodeError, TypeError) as err:
            raise UsageError(f"invalid spec {args.spec}: {err}") from err
    elif args.reference:
        spec = ex.ExperimentSpec(name="reference", sim=ex.reference_config())
    else:
        spec = ex.ExperimentSpec()
    cfg = spec.sim
    for flag, path in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            ex.set_param(cfg, path, value)
    if args.branching:
        cfg.dataset.branching = tuple(args.branching)
    if args.baseline == "flood":
        cfg.workload.flood_baseline = True
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects PATH=VALUE, got {item!r}")
        path, _, value = item.partition("=")
        ex.set_param(cfg, path.strip(), _parse_value(value))
    if args.seeds:
        spec.seeds = list(args.seeds)
    spec.validate()
    return spec


def _print_rows(rows: Sequence[dict], extra: Sequence[str] = ()) -> None:
    cols = list(extra) + list(SUMMARY_COLUMNS)
    if any("flood_recall" in r for r in rows):
        cols += list(FLOOD_COLUMNS)
    print(ex.format_table(rows, cols))


def _print_aggregate(rows: Sequence[dict]) -> dict:
    agg = ex.aggregate(rows)
    for key in ("recall", "messages", "peers_contacted", "peers_contacted_ratio"):
        if key in agg:
            a = agg[key]
            print(f"{key}: mean {a['mean']:.4g}  95% CI [{a['lo']:.4g}, {a['hi']:.4g}]")
    return agg


# -- subcommands --------------------------------------------------------------------------------


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    out = _out_dir(args, "dataset")
    tax = generate_taxonomy(args.taxonomy_seed, args.labels, tuple(args.branching))
    leaves = len(tax.leaves)
    per_peer = args.labels_per_peer if args.labels_per_peer is not None else min(3, leaves)
    cfg = DatasetConfig(
        n_labels=args.labels,
        branching=tuple(args.branching),
        zipf_s=args.zipf_s,
        labels_per_peer=per_peer,
        n_clusters=args.clusters,
        taxonomy_seed=args.taxonomy_seed,
    )
    ds = build_dataset(cfg, args.peers, args.seed)
    (out / "taxonomy.txt").write_text(dump_taxonomy(ds.taxonomy))
    (out / "profiles.txt").write_text(dump_profiles(list(enumerate(ds.profiles))))
    with open(out / "dataset.json", "w") as fh:
        json.dump({"seed": args.seed, "peers": args.peers, "config": vars(cfg)}, fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")
    hist = Counter(min(int(w * 10), 9) for p in ds.profiles for w in p.weights.values())
    print(f"seed: {args.seed}")
    print(f"labels: {len(ds.taxonomy)}  leaves: {leaves}  depth: {ds.taxonomy.height}")
    print(f"profiles: {len(ds.profiles)}  labels per peer: {per_peer}")
    print("profile weight histogram:")
    for b in range(10):
        print(f"  [{b / 10:.1f}, {(b + 1) / 10:.1f}{']' if b == 9 else ')'} {hist.get(b, 0)}")
    print(f"written: {out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    spec = _build_spec(args)
    out = _out_dir(args, spec.name)
    spec.dump(out / "spec.json")
    rows = []
    for seed in spec.seeds:
        cfg = ex.cell_config(spec, {}, seed)
        row, _ = ex.run_replication(cfg, out / f"seed{seed}")
        rows.append(row)
    _write_rows(out / "summary.jsonl", rows)
    print(f"seeds: {' '.join(map(str, spec.seeds))}")
    _print_rows(rows)
    agg = _print_aggregate(rows)
    with open(out / "aggregate.json", "w") as fh:
        json.dump(agg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"written: {out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _build_spec(args)
    for text in args.axis:
        name, values = _parse_axis(text)
        spec.sweep[name] = values
    if not spec.sweep:
        raise UsageError("sweep needs at least one --axis")
    spec.validate()
    out = _out_dir(args, spec.name + "-sweep")
    spec.dump(out / "spec.json")
    rows = ex.run_spec(spec, out)
    _write_rows(out / "sweep.jsonl", rows)
    print(f"seeds: {' '.join(map(str, spec.seeds))}")
    _print_rows(rows, extra=("cell",))
    print(f"written: {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.path)
    if not root.exists():
        raise UsageError(f"no such directory: {root}")
    rows = ex.report(root)
    if not rows:
        raise UsageError(f"no queries.jsonl under {root}")
    _print_rows(rows, extra=("run",))
    if len(rows) > 1:
        _print_aggregate(rows)
    return 0


def _write_rows(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atlaas", description="Two-layer semantic overlay simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="write a taxonomy and peer profiles")
    g.add_argument("--labels", type=int, default=200)
    g.add_argument("--peers", type=int, default=5000)
    g.add_argument("--branching", type=int, nargs=2, default=[2, 5], metavar=("MIN", "MAX"))
    g.add_argument("--zipf-s", type=float, default=1.0)
    g.add_argument("--labels-per-peer", type=int)
    g.add_argument("--clusters", type=int, default=0)
    g.add_argument("--taxonomy-seed", type=int, default=7)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_dataset)

    r = sub.add_parser("run", help="run replications of one spec")
    _add_spec_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the Cartesian product of parameter axes")
    _add_spec_flags(s)
    s.add_argument("--axis", action="append", default=[], metavar="PATH=V1,V2", help="e.g. workload.ttl=1,2,3")
    s.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="recompute summaries from per-query records")
    p.add_argument("path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as err:
        print(f"atlaas: error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
