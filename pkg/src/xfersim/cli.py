"""Command-line front end: preprocess, run, rmat and report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cost import CostModelConfig, load_config
from .graph import (
    GraphFormatError,
    compute_degree_stats,
    is_binary_csr,
    load_edge_list,
    read_binary_csr,
    write_binary_csr,
    write_u64_array,
)
from .partition import DEFAULT_HUB_FRACTION, DEFAULT_PARTITION_BYTES, hub_sort, partition_chunked
from .rmat import DEFAULT_PROBS, rmat_generate, write_edge_list
from .runner import ENGINE_MODES, run_algorithm
from .scheduler import PRIORITY_MODES, ConfigError, PriorityPolicy
from .sim import PlanMismatchError

log = logging.getLogger("xfersim")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3

COST_FLAGS = {
    "d2": int, "m": int, "mr": int, "rtt": float, "gamma": float, "alpha": float,
    "beta": float, "k": int, "compaction_throughput": float, "kernel_throughput": float,
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="cost model config file (key = value)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--metrics-out", help="per-iteration metrics CSV")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="xfersim", parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", parents=[common], help="edge list -> hub-sorted binary CSR")
    pre.add_argument("input")
    pre.add_argument("--out", required=True)
    pre.add_argument("--undirected", action="store_true")
    pre.add_argument("--weighted", action="store_true")
    pre.add_argument("--id-bytes", type=int, choices=(4, 8), default=4)
    pre.add_argument("--hub-fraction", type=float, default=DEFAULT_HUB_FRACTION)
    pre.add_argument("--partition-bytes", type=int, default=DEFAULT_PARTITION_BYTES)

    run = sub.add_parser("run", parents=[common], help="run an algorithm on the simulator")
    run.add_argument("input", help="binary CSR or edge list")
    run.add_argument("--algo", choices=("sssp", "bfs", "cc", "pr"), required=True)
    run.add_argument("--engine", choices=ENGINE_MODES, default="hybrid")
    run.add_argument("--priority", choices=PRIORITY_MODES, default="none")
    run.add_argument("--delta-agg", choices=("sum", "max"), default="sum")
    run.add_argument("--source", type=int, default=0)
    run.add_argument("--damping", type=float, default=0.85)
    run.add_argument("--epsilon", type=float, default=1e-9)
    run.add_argument("--max-iters", type=int, default=1000)
    run.add_argument("--streams", type=int, default=4)
    run.add_argument("--partition-bytes", type=int, default=DEFAULT_PARTITION_BYTES)
    run.add_argument("--undirected", action="store_true", help="edge-list input only")
    run.add_argument("--weighted", action="store_true", help="edge-list input only")
    run.add_argument("--summary-out", help="JSON run summary")
    run.add_argument("--result-out", help="binary float64 result array")
    run.add_argument("--result-text", help="text result, one value per line")
    run.add_argument("--dump-plan", help="JSON lines, one transfer plan per iteration")
    for name, typ in COST_FLAGS.items():
        run.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)

    gen = sub.add_parser("rmat", parents=[common], help="generate an RMAT edge list")
    gen.add_argument("--vertices", type=int, required=True)
    gen.add_argument("--edges", type=int, required=True)
    gen.add_argument("--probs", type=float, nargs=4, default=list(DEFAULT_PROBS),
                     metavar=("A", "B", "C", "D"))
    gen.add_argument("--out", required=True)

    rep = sub.add_parser("report", parents=[common], help="compare run summaries")
    rep.add_argument("summaries", nargs="+", help="JSON summaries written by run --summary-out")
    return p


def _cost_config(args) -> CostModelConfig:
    overrides = {k: getattr(args, k, None) for k in COST_FLAGS}
    try:
        if args.config:
            return load_config(args.config, **overrides)
        return CostModelConfig(**{k: v for k, v in overrides.items() if v is not None})
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad cost model config: {exc}") from None


def cmd_preprocess(args) -> int:
    g, id_map = load_edge_list(args.input, directed=not args.undirected,
                               weighted=args.weighted, id_bytes=args.id_bytes)
    g, perm = hub_sort(g, compute_degree_stats(g), args.hub_fraction)
    table = partition_chunked(g, args.partition_bytes)
    write_binary_csr(g, args.out)
    write_u64_array(perm, args.out + ".perm")
    write_u64_array(id_map, args.out + ".idmap")
    log.info("wrote %s: %d vertices, %d edges, %d partitions",
             args.out, g.num_vertices, g.num_edges, len(table))
    print(f"{g.num_vertices} vertices, {g.num_edges} edges, {len(table)} partitions")
    return EXIT_OK


def _load_graph(args):
    if is_binary_csr(args.input):
        return read_binary_csr(args.input)
    g, _ = load_edge_list(args.input, directed=not args.undirected, weighted=args.weighted)
    return g


def cmd_run(args) -> int:
    cfg = _cost_config(args)
    policy = PriorityPolicy(args.priority, args.delta_agg)
    g = _load_graph(args)
    if g.num_vertices and not 0 <= args.source < g.num_vertices:
        raise UsageError(f"source {args.source} out of range")
    sink = open(args.dump_plan, "w") if args.dump_plan else None
    try:
        report = run_algorithm(g, args.algo, cfg, engine=args.engine, policy=policy,
                               partition_bytes=args.partition_bytes, source=args.source,
                               damping=args.damping, epsilon=args.epsilon,
                               max_iters=args.max_iters, streams=args.streams, plan_sink=sink)
    finally:
        if sink:
            sink.close()
    if args.metrics_out:
        report.write_metrics(args.metrics_out)
    if args.summary_out:
        report.write_summary(args.summary_out)
    if args.result_out:
        Path(args.result_out).write_bytes(np.asarray(report.result, dtype="<f8").tobytes())
    if args.result_text:
        with open(args.result_text, "w") as fh:
            for x in np.asarray(report.result).tolist():
                fh.write(f"{x!r}\n")
    s = report.summary()
    print(f"{args.algo} engine={args.engine} iterations={s['iterations']} "
          f"converged={s['converged']} ratio={s['transfer_ratio']:.4f} makespan={s['makespan']:.3f}")
    return EXIT_OK


def cmd_rmat(args) -> int:
    try:
        src, dst = rmat_generate(args.vertices, args.edges, args.seed, tuple(args.probs))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_edge_list(args.out, src, dst)
    print(f"wrote {len(src)} edges to {args.out}")
    return EXIT_OK


REPORT_COLUMNS = ("name", "algo", "engine", "priority", "iterations", "transfer_ratio", "makespan")


def report_rows(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path) as fh:
            s = json.load(fh)
        rows.append({"name": Path(path).stem, **{k: s[k] for k in REPORT_COLUMNS[1:]}})
    return rows


def cmd_report(args) -> int:
    rows = report_rows(args.summaries)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r[c] for c in REPORT_COLUMNS])
    if args.metrics_out:
        with open(args.metrics_out, "w", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(REPORT_COLUMNS)
            for r in rows:
                cw.writerow([r[c] for c in REPORT_COLUMNS])
    return EXIT_OK


COMMANDS = {"preprocess": cmd_preprocess, "run": cmd_run, "rmat": cmd_rmat, "report": cmd_report}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, PlanMismatchError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
