"""Structure-recovery metrics, replicate records, and paired comparisons."""

import csv
import os
from dataclasses import dataclass, fields

import numpy as np

from .graph import arc_confusion, shd

# column order of the results CSV; every field round-trips exactly
CSV_COLUMNS = ("config_id", "scenario", "regime", "N", "F", "card", "c", "n_f",
               "N_F", "N_A", "seed", "score", "shd", "tp", "fp", "fn",
               "logscore", "wall_time_s")


@dataclass(frozen=True)
class RunRecord:
    """Metrics of one learned structure on one simulated replicate.

    The (config_id, seed) pair identifies the replicate; ``score`` names the
    scoring method, so records of different methods on the same replicate
    align on (config_id, seed). ``learned`` is kept in memory only and is
    not serialized.
    """

    config_id: str
    scenario: str
    regime: str
    n_nodes: int
    n_groups: int
    card: int
    arc_ratio: float
    rows_per_group: int
    n_perturbed: int
    n_removed: int
    seed: int
    score: str
    shd: int
    tp: int
    fp: int
    fn: int
    logscore: float
    wall_time_s: float
    learned: object = None

    def to_row(self):
        """Stringified CSV cells; floats use repr so they read back bit-exactly."""
        values = [getattr(self, f.name) for f in fields(self)[:-1]]
        return [repr(v) if isinstance(v, float) else str(v) for v in values]

    @staticmethod
    def from_row(row):
        (config_id, scenario, regime, n_nodes, n_groups, card, arc_ratio,
         rows_per_group, n_perturbed, n_removed, seed, score, shd_, tp, fp, fn,
         logscore, wall_time_s) = row
        return RunRecord(config_id, scenario, regime, int(n_nodes), int(n_groups),
                         int(card), float(arc_ratio), int(rows_per_group),
                         int(n_perturbed), int(n_removed), int(seed), score,
                         int(shd_), int(tp), int(fp), int(fn), float(logscore),
                         float(wall_time_s))


def evaluate(learned, truth):
    """(shd, tp, fp, fn) of a learned DAG against the true one.

    Distance is measured between equivalence classes; the confusion counts
    are skeleton-level, so tp + fn always equals the true skeleton size.
    """
    tp, fp, fn = arc_confusion(learned, truth)
    return shd(learned, truth), tp, fp, fn


def write_records(path, records, append=False):
    mode = "a" if append and os.path.exists(path) else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())
        fh.flush()


def read_records(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected results header in {path}")
        return [RunRecord.from_row(row) for row in reader]


def record_sort_key(record):
    """Canonical ordering making result files comparable across runs.

    logscore participates only to break ties when one replicate is scored
    several times with the same method (e.g. multiple imaginary sample
    sizes); it is deterministic, unlike wall time.
    """
    return (record.config_id, record.seed, record.score, record.logscore)


@dataclass(frozen=True)
class PairedDifference:
    """Replicate-aligned metric differences between two record sets (a - b)."""

    metric: str
    differences: tuple          # (config_id, seed, diff) per replicate
    by_config: dict             # config_id -> (median, q1, q3)


def paired_difference(records_a, records_b, metric="shd"):
    """Per-replicate ``metric`` difference of method a minus method b.

    Records are aligned on (config_id, seed) and must match one-to-one.
    Also returns median and quartiles of the differences per configuration.
    """
    index_b = {(r.config_id, r.seed): r for r in records_b}
    if len(index_b) != len(records_b):
        raise ValueError("duplicate (config_id, seed) among second records")
    seen = set()
    diffs = []
    for a in records_a:
        key = (a.config_id, a.seed)
        if key in seen:
            raise ValueError("duplicate (config_id, seed) among first records")
        seen.add(key)
        if key not in index_b:
            raise ValueError(f"no matching record for {key}")
        b = index_b[key]
        diffs.append((a.config_id, a.seed, getattr(a, metric) - getattr(b, metric)))
    if len(seen) != len(index_b):
        raise ValueError("second records contain unmatched replicates")
    by_config = {}
    for config_id in sorted({d[0] for d in diffs}):
        values = np.array([d[2] for d in diffs if d[0] == config_id], dtype=float)
        by_config[config_id] = (float(np.median(values)),
                                float(np.percentile(values, 25)),
                                float(np.percentile(values, 75)))
    return PairedDifference(metric, tuple(diffs), by_config)
