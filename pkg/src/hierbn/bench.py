"""Batch experiment runner: expand a declarative plan into replicate jobs,
learn with every requested score, and collect metric records into a CSV.

A job is one simulated replicate; it produces one record per (score, iss)
pair. Jobs are independent and deterministic given the plan's root seed, so
the record set is the same for any parallelism degree or completion order;
the output file is kept canonically sorted to make that visible.
"""

import itertools
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace

import numpy as np

from .metrics import RunRecord, evaluate, read_records, record_sort_key, write_records
from .scores import LocalScoreCache, ScoreConfig
from .search import run_hill_climb
from .simgen import GenConfig, generate


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid cells, scoring methods, and replication counts of one batch.

    ``cells`` holds GenConfig values whose seed field is ignored; every
    replicate derives its own seed from ``root_seed`` and its position in
    the (cell, structure, parameter set, sampling) tree.
    """

    cells: tuple
    scores: tuple = ("bdeu", "bhd")
    iss: tuple = (1.0,)
    n_structures: int = 3
    n_param_sets: int = 10
    n_data_sets: int = 10
    root_seed: int = 0
    vb_tol: float = 1e-6
    vb_max_iters: int = 500

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "scores", tuple(self.scores))
        object.__setattr__(self, "iss", tuple(float(v) for v in self.iss))
        if not self.cells:
            raise ValueError("plan needs at least one cell")
        if not self.scores or not self.iss:
            raise ValueError("plan needs at least one score and one iss value")
        if min(self.n_structures, self.n_param_sets, self.n_data_sets) < 1:
            raise ValueError("replication counts must be at least 1")

    @property
    def records_per_job(self):
        return len(self.scores) * len(self.iss)


@dataclass(frozen=True)
class Job:
    """One replicate to simulate and learn with every requested score."""

    job_id: str
    config: GenConfig
    scores: tuple
    iss: tuple
    vb_tol: float
    vb_max_iters: int


def cell_id(cell):
    return (f"{cell.scenario}-{cell.regime}-N{cell.n_nodes}-F{cell.n_groups}"
            f"-K{cell.card}-c{cell.arc_ratio:g}-n{cell.rows_per_group}"
            f"-P{cell.n_perturbed}-R{cell.n_removed}")


def _replicate_seed(root_seed, cell_index, structure, param_set, data_set):
    ss = np.random.SeedSequence(int(root_seed),
                                spawn_key=(cell_index, structure, param_set, data_set))
    return int(ss.generate_state(1, np.uint64)[0])


def expand(plan):
    """Deterministic job list: cells crossed with the replication tree.

    Job ids are stable across re-expansion of the same plan, so resumed
    batches recognize finished work.
    """
    jobs = []
    for cell_index, cell in enumerate(plan.cells):
        cid = cell_id(cell)
        for structure in range(plan.n_structures):
            for param_set in range(plan.n_param_sets):
                for data_set in range(plan.n_data_sets):
                    seed = _replicate_seed(plan.root_seed, cell_index,
                                           structure, param_set, data_set)
                    config = replace(cell, seed=seed)
                    jobs.append(Job(f"{cid}#s{structure}p{param_set}d{data_set}",
                                    config, plan.scores, plan.iss,
                                    plan.vb_tol, plan.vb_max_iters))
    return jobs


def run_job(job):
    """Simulate one replicate and learn it with every (score, iss) pair."""
    truth, dataset = generate(job.config)
    cfg = job.config
    cid = cell_id(cfg)
    records = []
    for kind in job.scores:
        for iss in job.iss:
            score_config = ScoreConfig(kind=kind, iss=iss, vb_tol=job.vb_tol,
                                       vb_max_iters=job.vb_max_iters)
            started = time.perf_counter()
            result = run_hill_climb(dataset, score_config, cache=LocalScoreCache())
            elapsed = time.perf_counter() - started
            shd_, tp, fp, fn = evaluate(result.dag, truth.master)
            records.append(RunRecord(
                config_id=cid, scenario=cfg.scenario, regime=cfg.regime,
                n_nodes=cfg.n_nodes, n_groups=cfg.n_groups, card=cfg.card,
                arc_ratio=cfg.arc_ratio, rows_per_group=cfg.rows_per_group,
                n_perturbed=cfg.n_perturbed, n_removed=cfg.n_removed,
                seed=cfg.seed, score=kind, shd=shd_, tp=tp, fp=fp, fn=fn,
                logscore=result.score, wall_time_s=elapsed, learned=result.dag))
    return records


def _completed_jobs(plan, existing):
    """Replicate keys whose full record set is already on disk."""
    by_key = {}
    for record in existing:
        by_key.setdefault((record.config_id, record.seed), []).append(record)
    done, kept = set(), []
    for key, group in by_key.items():
        if len(group) == plan.records_per_job and {r.score for r in group} == set(plan.scores):
            done.add(key)
            kept.extend(group)
    return done, kept


def run(plan, out_path, jobs=1, resume=False):
    """Execute the plan, appending records to ``out_path`` as jobs finish.

    With ``resume``, replicates whose records are already complete in the
    file are skipped and their rows kept; partial rows from an interrupted
    run are discarded and recomputed. A failing job is logged to
    ``out_path``.errors.log with its id and traceback, and the batch keeps
    going. On completion the file is rewritten in canonical sort order.
    """
    all_jobs = expand(plan)
    kept = []
    if resume and os.path.exists(out_path):
        done, kept = _completed_jobs(plan, read_records(out_path))
        pending = [j for j in all_jobs
                   if (cell_id(j.config), j.config.seed) not in done]
    else:
        pending = list(all_jobs)
    # start the file over with only complete rows; new rows append after
    write_records(out_path, kept, append=False)

    errors_path = out_path + ".errors.log"
    new_records = []

    def record_failure(job, exc):
        with open(errors_path, "a") as fh:
            fh.write(f"{job.job_id}: {exc!r}\n{traceback.format_exc()}\n")

    if jobs <= 1:
        for job in pending:
            try:
                rows = run_job(job)
            except Exception as exc:  # noqa: BLE001 - batch must not abort
                record_failure(job, exc)
                continue
            new_records.extend(rows)
            write_records(out_path, rows, append=True)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_job, job): job for job in pending}
            for future in as_completed(futures):
                job = futures[future]
                try:
                    rows = future.result()
                except Exception as exc:  # noqa: BLE001
                    record_failure(job, exc)
                    continue
                new_records.extend(rows)
                write_records(out_path, rows, append=True)

    final = sorted(kept + new_records, key=record_sort_key)
    tmp_path = out_path + ".tmp"
    write_records(tmp_path, final, append=False)
    os.replace(tmp_path, out_path)
    return final


def plan_to_json(plan):
    doc = {
        "schema": 1,
        "root_seed": plan.root_seed,
        "scores": list(plan.scores),
        "iss": list(plan.iss),
        "structures": plan.n_structures,
        "param_sets": plan.n_param_sets,
        "data_sets": plan.n_data_sets,
        "vb_tol": plan.vb_tol,
        "vb_max_iters": plan.vb_max_iters,
        "cells": [{
            "n_nodes": c.n_nodes, "card": c.card, "arc_ratio": c.arc_ratio,
            "n_groups": c.n_groups, "rows_per_group": c.rows_per_group,
            "regime": c.regime, "scenario": c.scenario,
            "n_perturbed": c.n_perturbed, "n_removed": c.n_removed,
        } for c in plan.cells],
    }
    return json.dumps(doc, indent=2)


_PLAN_KEYS = {"schema", "root_seed", "scores", "iss", "structures",
              "param_sets", "data_sets", "vb_tol", "vb_max_iters", "cells"}


def plan_from_json(text):
    doc = json.loads(text)
    unknown = set(doc) - _PLAN_KEYS
    if unknown:
        raise ValueError(f"unknown plan fields: {sorted(unknown)}")
    try:
        cells = tuple(GenConfig(**cell) for cell in doc["cells"])
    except TypeError as exc:
        raise ValueError(f"bad cell in plan: {exc}") from exc
    return ExperimentPlan(
        cells=cells,
        scores=tuple(doc.get("scores", ("bdeu", "bhd"))),
        iss=tuple(doc.get("iss", (1.0,))),
        n_structures=int(doc.get("structures", 3)),
        n_param_sets=int(doc.get("param_sets", 10)),
        n_data_sets=int(doc.get("data_sets", 10)),
        root_seed=int(doc.get("root_seed", 0)),
        vb_tol=float(doc.get("vb_tol", 1e-6)),
        vb_max_iters=int(doc.get("vb_max_iters", 500)),
    )


def full_grid(regime, scenario="a", scores=("bdeu", "bhd"), root_seed=0,
              n_perturbed=0, n_removed=0):
    """The complete scenario grid at standard replication counts."""
    cells = tuple(
        GenConfig(n_nodes=n, card=card, arc_ratio=c, n_groups=f,
                  rows_per_group=rows, regime=regime, scenario=scenario,
                  n_perturbed=n_perturbed, n_removed=n_removed)
        for n, f, card, rows, c in itertools.product(
            (5, 10), (2, 5, 10), (2, 5), (10, 100, 200, 500, 1000), (1.0, 1.2, 1.5)))
    return ExperimentPlan(cells=cells, scores=tuple(scores), root_seed=root_seed)


def desk_plan(regime="hier", scenario="a", scores=("bdeu", "bhd"), root_seed=0,
              n_perturbed=0, n_removed=0):
    """Laptop-sized slice of the grid for quick end-to-end checks."""
    cells = tuple(
        GenConfig(n_nodes=5, card=2, arc_ratio=1.0, n_groups=f,
                  rows_per_group=rows, regime=regime, scenario=scenario,
                  n_perturbed=n_perturbed, n_removed=n_removed)
        for f, rows in itertools.product((2, 5), (100, 500)))
    return ExperimentPlan(cells=cells, scores=tuple(scores), n_structures=2,
                          n_param_sets=3, n_data_sets=3, root_seed=root_seed)
