"""``sortbench run``: one benchmark run per invocation.

Exit status is 0 only when validation passes.
"""

import argparse
import json
import logging
import sys

from .bench import VARIANTS, RunConfig, run


def _size(text):
    units = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}
    t = text.strip().lower().rstrip("b").rstrip("i")
    if t and t[-1] in units:
        return int(float(t[:-1]) * units[t[-1]])
    return int(float(t))


def _kill(text):
    node, _, frac = text.partition("@")
    if not frac:
        raise argparse.ArgumentTypeError("expected <node>@<fraction>, e.g. 1@0.3")
    return int(node), float(frac)


def build_parser():
    p = argparse.ArgumentParser(prog="sortbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one sort benchmark")
    r.add_argument("--config", help="JSON file with RunConfig fields")
    r.add_argument("--data-size", type=_size)
    r.add_argument("--partitions", type=int, help="M = R; overrides the partition size")
    r.add_argument("--variant", choices=VARIANTS)
    r.add_argument("--nodes", type=int)
    r.add_argument("--slots", type=int)
    r.add_argument("--memory-limit", type=_size, help="object store bytes per node")
    r.add_argument("--fuse-threshold", type=_size)
    r.add_argument("--seed", type=int)
    r.add_argument("--kill-node", type=_kill, action="append", default=[],
                   metavar="ID@FRACTION")
    r.add_argument("--report", help="write the JSON report here")
    r.add_argument("--trace", help="write trace events (.jsonl, or .csv)")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    cluster = dict(d.get("cluster", {}))
    store = dict(cluster.get("store", {}))
    if args.data_size is not None:
        d["data_size"] = args.data_size
    if args.variant:
        d["variant"] = args.variant
    if args.seed is not None:
        d["seed"] = args.seed
    if args.nodes is not None:
        cluster["nodes"] = args.nodes
    if args.slots is not None:
        cluster["slots"] = args.slots
    if args.memory_limit is not None:
        store["memory_limit"] = args.memory_limit
    if args.fuse_threshold is not None:
        store["fuse_threshold"] = args.fuse_threshold
    cluster["store"] = store
    d["cluster"] = cluster
    if args.partitions:
        size = d.get("data_size", RunConfig.data_size)
        d["partition_size"] = -(-size // args.partitions)
    if args.kill_node:
        plan = dict(d.get("failure_plan", {}))
        events = list(plan.get("events", []))
        events += [{"action": "kill_node", "node": n, "after_fraction": f}
                   for n, f in args.kill_node]
        d["failure_plan"] = {"events": events}
    if args.report:
        d["output"] = args.report
    if args.trace:
        d["trace"] = args.trace
    return RunConfig.from_dict(d)


def _table(report):
    v = report.validation
    rows = [
        ("variant", report.variant),
        ("data size (bytes)", report.data_size),
        ("partitions", report.num_partitions),
        ("job completion time (s)", f"{report.job_completion_time:.4f}"),
        ("theoretical baseline 4D/B (s)", f"{report.theoretical_baseline_seconds:.4f}"),
        ("bytes spilled", report.io["bytes_spilled"]),
        ("bytes restored", report.io["bytes_restored"]),
        ("spill files", report.io["spill_files_created"]),
        ("network bytes", report.io["network_bytes"]),
        ("blocks created", report.blocks_created),
        ("reducer-visible blocks", report.reducer_visible_blocks),
        ("task retries", report.task_retries),
        ("validation", "PASS" if v["passed"] else "FAIL"),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {val}" for k, val in rows)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    print(_table(report))
    if not report.passed:
        json.dump({"error": "ValidationFailed", "validation": report.validation}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
