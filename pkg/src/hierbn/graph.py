"""Directed acyclic graphs, their equivalence-class representatives, and
structural distance metrics.

Nodes are integer indices 0..n-1; name mapping is left to callers. Dag values
are immutable snapshots: mutating operations return new values.
"""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np


class CycleError(ValueError):
    """Raised when an arc set admits no topological order."""


def is_acyclic(node_count, arcs):
    """Kahn's algorithm on an explicit arc set."""
    indegree = [0] * node_count
    children = [[] for _ in range(node_count)]
    for u, v in arcs:
        indegree[v] += 1
        children[u].append(v)
    stack = [i for i in range(node_count) if indegree[i] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in children[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                stack.append(v)
    return seen == node_count


@dataclass(frozen=True)
class Dag:
    """Immutable directed acyclic graph over ``node_count`` labelled nodes."""

    node_count: int
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        arcs = frozenset((int(u), int(v)) for u, v in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        for u, v in arcs:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"arc ({u}, {v}) out of range")
        if not is_acyclic(self.node_count, arcs):
            raise CycleError("arc set contains a cycle")

    def parents(self, v):
        return tuple(sorted(u for u, w in self.arcs if w == v))

    def children(self, u):
        return tuple(sorted(w for x, w in self.arcs if x == u))

    def has_arc(self, u, v):
        return (u, v) in self.arcs

    def adjacent(self, u, v):
        return (u, v) in self.arcs or (v, u) in self.arcs

    def has_path(self, source, target):
        """Reachability via arcs; used for incremental acyclicity checks."""
        if source == target:
            return True
        children = {}
        for u, v in self.arcs:
            children.setdefault(u, []).append(v)
        stack = [source]
        visited = {source}
        while stack:
            u = stack.pop()
            for v in children.get(u, ()):
                if v == target:
                    return True
                if v not in visited:
                    visited.add(v)
                    stack.append(v)
        return False

    def with_arc(self, u, v):
        return Dag(self.node_count, self.arcs | {(u, v)})

    def without_arc(self, u, v):
        if (u, v) not in self.arcs:
            raise ValueError(f"arc ({u}, {v}) not present")
        return Dag(self.node_count, self.arcs - {(u, v)})

    def with_reversed(self, u, v):
        if (u, v) not in self.arcs:
            raise ValueError(f"arc ({u}, {v}) not present")
        return Dag(self.node_count, (self.arcs - {(u, v)}) | {(v, u)})

    def topological_order(self):
        indegree = [0] * self.node_count
        children = [[] for _ in range(self.node_count)]
        for u, v in self.arcs:
            indegree[v] += 1
            children[u].append(v)
        # smallest-index-first for a deterministic order
        ready = sorted(i for i in range(self.node_count) if indegree[i] == 0)
        order = []
        while ready:
            u = ready.pop(0)
            order.append(u)
            changed = False
            for v in children[u]:
                indegree[v] -= 1
                if indegree[v] == 0:
                    ready.append(v)
                    changed = True
            if changed:
                ready.sort()
        return tuple(order)

    @property
    def arc_count(self):
        return len(self.arcs)

    def sorted_arcs(self):
        return tuple(sorted(self.arcs))


@dataclass(frozen=True)
class Cpdag:
    """Partially directed representative of a Markov equivalence class.

    ``directed`` holds compelled arcs (u, v); ``undirected`` holds reversible
    adjacencies as sorted pairs (min, max). The two sets are disjoint by
    construction.
    """

    node_count: int
    directed: frozenset
    undirected: frozenset

    def __post_init__(self):
        und = frozenset((min(u, v), max(u, v)) for u, v in self.undirected)
        object.__setattr__(self, "undirected", und)
        for u, v in self.directed:
            if (min(u, v), max(u, v)) in und:
                raise ValueError(f"pair ({u}, {v}) both directed and undirected")

    def skeleton(self):
        pairs = {(min(u, v), max(u, v)) for u, v in self.directed}
        return frozenset(pairs | set(self.undirected))

    def pair_status(self, u, v):
        """One of 'none', 'fwd' (u->v), 'rev' (v->u), 'und'."""
        if (u, v) in self.directed:
            return "fwd"
        if (v, u) in self.directed:
            return "rev"
        if (min(u, v), max(u, v)) in self.undirected:
            return "und"
        return "none"

    @property
    def edge_count(self):
        return len(self.directed) + len(self.undirected)


def _v_structures(dag):
    out = set()
    for z in range(dag.node_count):
        pa = dag.parents(z)
        for x, y in itertools.combinations(pa, 2):
            if not dag.adjacent(x, y):
                out.add((x, z, y))
    return frozenset(out)


def to_cpdag(dag):
    """Skeleton plus v-structures, closed under the orientation rules.

    Three propagation rules suffice to orient every compelled arc when the
    starting point is the pattern of an actual DAG (no background
    knowledge); the remaining skeleton edges stay undirected.
    """
    n = dag.node_count
    adj = [set() for _ in range(n)]
    for u, v in dag.arcs:
        adj[u].add(v)
        adj[v].add(u)
    directed = set()
    for x, z, y in _v_structures(dag):
        directed.add((x, z))
        directed.add((y, z))

    def und_neighbours(a):
        return [b for b in adj[a] if (a, b) not in directed and (b, a) not in directed]

    changed = True
    while changed:
        changed = False
        # R1: a->b, b-c, a and c non-adjacent  =>  b->c
        for a, b in list(directed):
            for c in und_neighbours(b):
                if c != a and c not in adj[a]:
                    directed.add((b, c))
                    changed = True
        # R2: a->c->b with a-b undirected  =>  a->b
        for a in range(n):
            for b in und_neighbours(a):
                if any((a, c) in directed and (c, b) in directed for c in adj[a]):
                    directed.add((a, b))
                    changed = True
        # R3: a-b, a-c, a-d, c->b, d->b, c and d non-adjacent  =>  a->b
        for a in range(n):
            for b in und_neighbours(a):
                into_b = [c for c in und_neighbours(a) if (c, b) in directed]
                if any(d not in adj[c] and c != d
                       for c, d in itertools.combinations(into_b, 2)):
                    directed.add((a, b))
                    changed = True

    undirected = set()
    for u in range(n):
        for v in adj[u]:
            if u < v and (u, v) not in directed and (v, u) not in directed:
                undirected.add((u, v))
    return Cpdag(n, frozenset(directed), frozenset(undirected))


def _as_cpdag(g):
    return g if isinstance(g, Cpdag) else to_cpdag(g)


def shd(estimated, truth):
    """Structural Hamming distance between the equivalence classes.

    Both inputs are reduced to their equivalence-class representatives, then
    every node pair whose status differs (absent / directed either way /
    undirected) counts as one edit.
    """
    a = _as_cpdag(estimated)
    b = _as_cpdag(truth)
    if a.node_count != b.node_count:
        raise ValueError("graphs must share the node set")
    count = 0
    for u, v in itertools.combinations(range(a.node_count), 2):
        if a.pair_status(u, v) != b.pair_status(u, v):
            count += 1
    return count


def arc_confusion(estimated, truth):
    """Skeleton-level (tp, fp, fn) of the equivalence-class representatives."""
    a = _as_cpdag(estimated).skeleton()
    b = _as_cpdag(truth).skeleton()
    tp = len(a & b)
    fp = len(a - b)
    fn = len(b - a)
    return tp, fp, fn


def dag_to_json(dag, names=None):
    """Serialize as a versioned JSON document with named nodes."""
    if names is None:
        names = [f"X{i}" for i in range(dag.node_count)]
    doc = {
        "schema": 1,
        "nodes": list(names),
        "arcs": [[names[u], names[v]] for u, v in dag.sorted_arcs()],
    }
    return json.dumps(doc, indent=2)


def dag_from_json(text):
    """Inverse of dag_to_json; returns (Dag, node names)."""
    doc = json.loads(text)
    names = list(doc["nodes"])
    index = {name: i for i, name in enumerate(names)}
    arcs = {(index[u], index[v]) for u, v in doc["arcs"]}
    return Dag(len(names), frozenset(arcs)), names


def dag_to_dot(dag, names=None, graph_name="g"):
    if names is None:
        names = [f"X{i}" for i in range(dag.node_count)]
    lines = [f"digraph {graph_name} {{"]
    for name in names:
        lines.append(f'  "{name}";')
    for u, v in dag.sorted_arcs():
        lines.append(f'  "{names[u]}" -> "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cpdag_to_dot(cpdag, names=None, graph_name="g"):
    """DOT-style text; reversible adjacencies are written with ``--``."""
    if names is None:
        names = [f"X{i}" for i in range(cpdag.node_count)]
    lines = [f"digraph {graph_name} {{"]
    for name in names:
        lines.append(f'  "{name}";')
    for u, v in sorted(cpdag.directed):
        lines.append(f'  "{names[u]}" -> "{names[v]}";')
    for u, v in sorted(cpdag.undirected):
        lines.append(f'  "{names[u]}" -- "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dag_from_dot(text):
    """Read back the directed subset of the DOT form emitted above."""
    names = []
    arcs = []
    for raw in text.splitlines():
        line = raw.strip().rstrip(";")
        if not line or line.startswith(("digraph", "}")):
            continue
        if "->" in line:
            left, right = [part.strip().strip('"') for part in line.split("->", 1)]
            arcs.append((left, right))
        else:
            names.append(line.strip('"'))
    if not names:
        seen = []
        for u, v in arcs:
            for name in (u, v):
                if name not in seen:
                    seen.append(name)
        names = seen
    index = {name: i for i, name in enumerate(names)}
    return Dag(len(names), frozenset((index[u], index[v]) for u, v in arcs)), names
