"""Command-line entry points: learn, score, simulate, bench.

Exit codes: 0 on success, 1 for usage errors, 2 for data errors, 3 for
runtime failures. Diagnostics go to stderr; results go to stdout or the
requested output files.
"""

import argparse
import json
import os
import sys

from . import bench as bench_mod
from .data import DataError, load_csv
from .graph import dag_from_dot, dag_from_json, dag_to_dot, dag_to_json
from .metrics import record_sort_key
from .scores import LocalScoreCache, ScoreConfig, local_log_score
from .search import SearchConfig, run_hill_climb
from .simgen import GenConfig, derive_rng, generate


class _UsageError(Exception):
    """Command-line contract violation detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage by default; the contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def build_parser():
    parser = _Parser(prog="hierbn",
                     description="Structure learning for discrete data observed in groups")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_score_flags(p, with_group=True):
        p.add_argument("--data", required=True, help="CSV file of complete categorical data")
        if with_group:
            p.add_argument("--group", default=None,
                           help="column holding the group label (required for bhd)")
        p.add_argument("--score", default="bdeu", choices=("bdeu", "bic", "bhd"))
        p.add_argument("--iss", type=float, default=1.0, help="imaginary sample size")
        p.add_argument("--vb-tol", type=float, default=1e-6,
                       help="relative bound tolerance of the variational fit")
        p.add_argument("--vb-max-iters", type=int, default=500)
        p.add_argument("--s0", type=float, default=None,
                       help="total mass of the flat hyperprior (default: one per cell)")

    learn = sub.add_parser("learn", help="greedy structure search on a dataset")
    add_score_flags(learn)
    learn.add_argument("--max-parents", type=int, default=None)
    learn.add_argument("--max-iters", type=int, default=1000, help="search step cap")
    learn.add_argument("--out", default=None, help="write the graph JSON here instead of stdout")
    learn.add_argument("--dot", default=None, help="also write the graph in DOT form")

    score = sub.add_parser("score", help="score an existing graph on a dataset")
    add_score_flags(score)
    score.add_argument("--graph", required=True, help="graph file (.json or .dot)")

    simulate = sub.add_parser("simulate", help="write synthetic replicates and their truth")
    simulate.add_argument("--config", required=True, help="generator configuration (JSON)")
    simulate.add_argument("--out-dir", required=True)
    simulate.add_argument("--seed", type=int, default=None, help="override the config seed")

    bench = sub.add_parser("bench", help="run an experiment plan into a results CSV")
    bench.add_argument("--plan", required=True, help="experiment plan (JSON)")
    bench.add_argument("--out", required=True, help="results CSV path")
    bench.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    bench.add_argument("--resume", action="store_true",
                       help="keep complete replicates already in the output file")
    bench.add_argument("--seed", type=int, default=None, help="override the plan root seed")

    return parser


def _score_config(args):
    return ScoreConfig(kind=args.score, iss=args.iss, vb_tol=args.vb_tol,
                       vb_max_iters=args.vb_max_iters, s0=args.s0)


def _load_dataset(args):
    if args.score == "bhd" and args.group is None:
        raise _UsageError("--score bhd requires --group")
    return load_csv(args.data, args.group)


def _cmd_learn(args):
    data = _load_dataset(args)
    config = _score_config(args)
    search_config = SearchConfig(max_parents=args.max_parents,
                                 max_iterations=args.max_iters)
    result = run_hill_climb(data, config, search_config)
    names = [v.name for v in data.variables]
    doc = json.loads(dag_to_json(result.dag, names))
    doc["score"] = args.score
    doc["iss"] = args.iss
    doc["logscore"] = result.score
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(dag_to_dot(result.dag, names))
    return 0


def _read_graph(path, data):
    with open(path) as fh:
        text = fh.read()
    try:
        if path.endswith(".dot"):
            dag, names = dag_from_dot(text)
        else:
            dag, names = dag_from_json(text)
    except (ValueError, KeyError) as exc:
        raise DataError(f"cannot parse graph file {path}: {exc}") from exc
    expected = [v.name for v in data.variables]
    if sorted(names) != sorted(expected):
        raise DataError("graph nodes do not match the dataset's variables")
    if names != expected:
        # remap arcs onto the dataset's variable order
        to_data = {name: expected.index(name) for name in names}
        dag = type(dag)(len(expected),
                        frozenset((to_data[names[u]], to_data[names[v]]) for u, v in dag.arcs))
    return dag


def _cmd_score(args):
    data = _load_dataset(args)
    dag = _read_graph(args.graph, data)
    config = _score_config(args)
    cache = LocalScoreCache()
    names = [v.name for v in data.variables]
    per_node = {}
    total = 0.0
    for node in range(data.n_variables):  # node order matches total_log_score
        value = local_log_score(data, node, dag.parents(node), config, cache)
        per_node[names[node]] = value
        total += value
    print(json.dumps({"schema": 1, "score": args.score, "iss": args.iss,
                      "logscore": total, "per_node": per_node}, indent=2))
    return 0


def _write_replicate_csv(path, dataset):
    import csv as _csv
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        names = [v.name for v in dataset.variables]
        writer.writerow(["group"] + names)
        for label, block in zip(dataset.groups, dataset.group_rows):
            for row in block:
                writer.writerow([label] + [dataset.variables[i].levels[row[i]]
                                           for i in range(len(names))])


def _cmd_simulate(args):
    with open(args.config) as fh:
        try:
            doc = json.load(fh)
        except ValueError as exc:
            raise DataError(f"cannot parse {args.config}: {exc}") from exc
    reps = {key: int(doc.pop(key, 1))
            for key in ("structures", "param_sets", "data_sets")}
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        base = GenConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad generator configuration: {exc}") from exc
    os.makedirs(args.out_dir, exist_ok=True)
    truth_doc = {"schema": 1, "replicates": {}}
    for s in range(reps["structures"]):
        for p in range(reps["param_sets"]):
            for d in range(reps["data_sets"]):
                seed = int(derive_rng(base.seed, s, p, d).integers(2 ** 63))
                config = GenConfig(**{**doc, "seed": seed})
                truth, dataset = generate(config)
                rep_id = f"s{s}p{p}d{d}"
                _write_replicate_csv(os.path.join(args.out_dir, f"rep_{rep_id}.csv"), dataset)
                names = [v.name for v in dataset.variables]
                truth_doc["replicates"][rep_id] = {
                    "seed": seed,
                    "regime": config.regime,
                    "scenario": config.scenario,
                    "master": json.loads(dag_to_json(truth.master, names)),
                    "group_dags": {label: json.loads(dag_to_json(g, names))
                                   for label, g in zip(dataset.groups, truth.group_dags)},
                }
    with open(os.path.join(args.out_dir, "truth.json"), "w") as fh:
        json.dump(truth_doc, fh, indent=2)
    return 0


def _cmd_bench(args):
    with open(args.plan) as fh:
        try:
            plan = bench_mod.plan_from_json(fh.read())
        except ValueError as exc:
            raise DataError(f"cannot parse plan {args.plan}: {exc}") from exc
    if args.seed is not None:
        from dataclasses import replace as _replace
        plan = _replace(plan, root_seed=args.seed)
    if args.jobs < 1:
        raise _UsageError("--jobs must be at least 1")
    records = bench_mod.run(plan, args.out, jobs=args.jobs, resume=args.resume)
    records = sorted(records, key=record_sort_key)
    print(json.dumps({"schema": 1, "records": len(records), "out": args.out}))
    return 0


_COMMANDS = {
    "learn": _cmd_learn,
    "score": _cmd_score,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"hierbn: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"hierbn: data error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - contract: runtime failures exit 3
        print(f"hierbn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
