"""Loading and counting of complete discrete data observed in named groups.

A dataset is a collection of rows over categorical variables, where every row
belongs to exactly one group. The group label conditions the analysis: it is
never treated as a candidate variable itself.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Raised when an input dataset violates the complete-data contract."""


@dataclass(frozen=True)
class VariableMeta:
    """Name and ordered level labels of one categorical variable."""

    name: str
    levels: tuple

    @property
    def card(self):
        return len(self.levels)


@dataclass(frozen=True)
class FamilyCounts:
    """Per-group contingency table for one child given a parent set.

    ``per_group`` has shape (F, J, K): F groups, J parent configurations in
    row-major order over the parent level tuples (J = 1 for an empty parent
    set), K child levels. Entries are non-negative int64 counts; rows that
    were never observed are kept as explicit zeros.
    """

    child_card: int
    parent_cards: tuple
    per_group: np.ndarray

    def __post_init__(self):
        f, j, k = self.per_group.shape
        expected_j = int(np.prod(self.parent_cards, dtype=np.int64)) if self.parent_cards else 1
        if j != expected_j or k != self.child_card:
            raise ValueError("count table shape does not match declared cardinalities")

    @property
    def n_groups(self):
        return self.per_group.shape[0]

    @property
    def n_configs(self):
        return self.per_group.shape[1]

    @property
    def pooled(self):
        """Counts summed over groups, shape (J, K)."""
        return self.per_group.sum(axis=0)

    @property
    def total(self):
        return int(self.per_group.sum())

    def single_group(self, f):
        """The same family restricted to group index ``f``."""
        return FamilyCounts(self.child_card, self.parent_cards, self.per_group[f:f + 1].copy())


class GroupedDataset:
    """Complete categorical data split by group label.

    Rows are stored per group as read-only int arrays of level indices,
    shape (n_f, N). Variable order and level order are fixed at construction,
    so counting is invariant to row order within a group.
    """

    def __init__(self, variables, groups, group_rows):
        if len(groups) != len(group_rows):
            raise ValueError("one row block required per group")
        self.variables = tuple(variables)
        self.groups = tuple(groups)
        blocks = []
        n_vars = len(self.variables)
        for block in group_rows:
            arr = np.ascontiguousarray(np.asarray(block, dtype=np.int64))
            if arr.ndim != 2 or arr.shape[1] != n_vars:
                raise ValueError("row block shape must be (n_f, n_variables)")
            for i, var in enumerate(self.variables):
                col = arr[:, i]
                if col.size and (col.min() < 0 or col.max() >= var.card):
                    raise ValueError(f"level index out of range for variable {var.name!r}")
            arr.flags.writeable = False
            blocks.append(arr)
        self.group_rows = tuple(blocks)

    @property
    def n_variables(self):
        return len(self.variables)

    @property
    def n_groups(self):
        return len(self.groups)

    @property
    def n_rows(self):
        return sum(block.shape[0] for block in self.group_rows)

    def variable_index(self, name):
        for i, var in enumerate(self.variables):
            if var.name == name:
                return i
        raise KeyError(name)

    def cardinalities(self):
        return tuple(v.card for v in self.variables)


def load_csv(path, group_column):
    """Read a header-named CSV into a GroupedDataset.

    Every column except ``group_column`` becomes a variable whose levels are
    the distinct observed strings, sorted lexicographically. Groups are the
    distinct labels of ``group_column``, also sorted. Passing
    ``group_column=None`` places all rows in a single unnamed group.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)
    if group_column is not None and group_column not in header:
        raise DataError(f"unknown group column {group_column!r}")
    if not rows:
        raise DataError(f"{path}: no data rows")

    group_idx = header.index(group_column) if group_column is not None else None
    var_names = [name for i, name in enumerate(header) if i != group_idx]
    if not var_names:
        raise DataError("no variable columns besides the group column")

    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 2}: expected {len(header)} cells, got {len(row)}")
        for cell in row:
            if cell == "":
                raise DataError(f"row {r + 2}: incomplete data (empty cell)")

    var_cols = [i for i in range(len(header)) if i != group_idx]
    levels = []
    for i in var_cols:
        observed = sorted({row[i] for row in rows})
        if len(observed) < 2:
            raise DataError(f"degenerate variable {header[i]!r}: fewer than 2 observed levels")
        levels.append(observed)
    variables = [VariableMeta(header[i], tuple(lv)) for i, lv in zip(var_cols, levels)]
    level_index = [{label: k for k, label in enumerate(lv)} for lv in levels]

    if group_idx is None:
        group_labels = [""]
        by_group = {"": rows}
    else:
        group_labels = sorted({row[group_idx] for row in rows})
        by_group = {g: [] for g in group_labels}
        for row in rows:
            by_group[row[group_idx]].append(row)

    blocks = []
    for g in group_labels:
        block = np.empty((len(by_group[g]), len(var_cols)), dtype=np.int64)
        for r, row in enumerate(by_group[g]):
            for c, i in enumerate(var_cols):
                block[r, c] = level_index[c][row[i]]
        blocks.append(block)
    return GroupedDataset(variables, group_labels, blocks)


def family_counts(data, child, parents):
    """Contingency counts of one child variable given a parent set, per group.

    ``child`` is a variable index; ``parents`` an iterable of variable
    indices (order matters for the configuration indexing, which is
    row-major over the parent level tuples). Counts are dense: parent
    configurations never observed stay as zero rows.
    """
    parents = tuple(parents)
    if child in parents:
        raise ValueError("child cannot be its own parent")
    cards = data.cardinalities()
    child_card = cards[child]
    parent_cards = tuple(cards[p] for p in parents)
    n_configs = 1
    for c in parent_cards:
        n_configs *= c
    table = np.zeros((data.n_groups, n_configs, child_card), dtype=np.int64)
    for f, block in enumerate(data.group_rows):
        if block.shape[0] == 0:
            continue
        config = np.zeros(block.shape[0], dtype=np.int64)
        for p, card in zip(parents, parent_cards):
            config = config * card + block[:, p]
        flat = config * child_card + block[:, child]
        table[f] = np.bincount(flat, minlength=n_configs * child_card).reshape(n_configs, child_card)
    return FamilyCounts(child_card, parent_cards, table)
