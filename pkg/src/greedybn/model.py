"""Bayesian networks with CPTs, their moral graphs, and serialization."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from greedybn.dataset import DiscreteTable
from greedybn.exceptions import CycleError, DataError
from greedybn.graph import is_acyclic, topological_sort
from greedybn.scoring import family_counts

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class BayesNet:
    """A DAG over discrete nodes with one CPT per node.

    ``cpts[i]`` has shape ``(q_i, r_i)``; row ``j`` is the distribution of
    node ``i`` given parent configuration ``j`` (mixed radix over the sorted
    parents, smallest index most significant). ``states`` optionally carries
    the raw label of each state.
    """

    node_names: tuple
    cardinalities: tuple
    parents: tuple
    cpts: tuple
    states: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_names", tuple(self.node_names))
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        object.__setattr__(self, "parents", tuple(tuple(sorted(int(p) for p in ps)) for ps in self.parents))
        cpts = []
        for c in self.cpts:
            arr = np.array(c, dtype=np.float64)
            arr.setflags(write=False)
            cpts.append(arr)
        object.__setattr__(self, "cpts", tuple(cpts))
        if self.states is not None:
            object.__setattr__(self, "states", tuple(tuple(int(s) for s in st) for st in self.states))
        self._validate()

    def _validate(self):
        n = len(self.node_names)
        if not (len(self.cardinalities) == len(self.parents) == len(self.cpts) == n):
            raise ValueError("node_names, cardinalities, parents and cpts differ in length")
        if not is_acyclic(self.parents):
            raise CycleError("parent relation is cyclic")
        for i, (ps, cpt) in enumerate(zip(self.parents, self.cpts)):
            if any(not 0 <= p < n or p == i for p in ps):
                raise ValueError(f"node {i} has an invalid parent list {ps}")
            shape = (math.prod(self.cardinalities[p] for p in ps), self.cardinalities[i])
            if cpt.shape != shape:
                raise ValueError(f"CPT of node {self.node_names[i]!r} has shape {cpt.shape}, expected {shape}")
            if (cpt < 0).any() or not np.allclose(cpt.sum(axis=1), 1.0, rtol=0, atol=ROW_SUM_TOL):
                raise ValueError(f"CPT of node {self.node_names[i]!r} is not row-stochastic")
        if self.states is not None:
            if len(self.states) != n or any(len(s) != c for s, c in zip(self.states, self.cardinalities)):
                raise ValueError("states do not match cardinalities")

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    def index(self, name: str) -> int:
        try:
            return self.node_names.index(name)
        except ValueError:
            raise KeyError(f"unknown node {name!r}; valid names: {', '.join(self.node_names)}") from None

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c, ps in enumerate(self.parents) for p in ps]

    def __eq__(self, other):
        if not isinstance(other, BayesNet):
            return NotImplemented
        return (
            self.node_names == other.node_names
            and self.cardinalities == other.cardinalities
            and self.parents == other.parents
            and self.states == other.states
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = None

    def to_dict(self) -> dict:
        nodes = []
        for i, name in enumerate(self.node_names):
            node = {
                "name": name,
                "cardinality": self.cardinalities[i],
                "parents": list(self.parents[i]),
                "cpt": self.cpts[i].tolist(),
            }
            if self.states is not None:
                node["states"] = list(self.states[i])
            nodes.append(node)
        return {"nodes": nodes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "BayesNet":
        try:
            nodes = payload["nodes"]
            states = [n.get("states") for n in nodes]
            return cls(
                tuple(n["name"] for n in nodes),
                tuple(n["cardinality"] for n in nodes),
                tuple(tuple(n["parents"]) for n in nodes),
                tuple(n["cpt"] for n in nodes),
                None if any(s is None for s in states) else tuple(states),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed model JSON: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "BayesNet":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"model file is not valid JSON: {exc}") from None
        return cls.from_dict(payload)

    def to_dot(self) -> str:
        lines = ["digraph bayesnet {"]
        lines += [f"  n{i} [label={_dot_quote(name)}];" for i, name in enumerate(self.node_names)]
        lines += [f"  n{p} -> n{c};" for p, c in sorted(self.edges())]
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MarkovNet:
    node_names: tuple
    edges: frozenset

    def __post_init__(self):
        edges = frozenset(tuple(sorted(e)) for e in self.edges)
        if any(a == b for a, b in edges):
            raise ValueError("self-loops are not allowed")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_names", tuple(self.node_names))

    def neighbors(self, node: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == node} | {a for a, b in self.edges if b == node})

    def to_dot(self) -> str:
        lines = ["graph markovnet {"]
        lines += [f"  n{i} [label={_dot_quote(name)}];" for i, name in enumerate(self.node_names)]
        lines += [f"  n{a} -- n{b};" for a, b in sorted(self.edges)]
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_quote(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def fit_cpts(table: DiscreteTable, selection, alpha: float = 1.0) -> BayesNet:
    """Estimate CPTs for a fixed structure.

    Entry ``(j, k)`` is ``(N_ijk + alpha) / (N_ij + alpha * r)``. With
    ``alpha = 0`` a parent configuration that never occurs gets a uniform row.
    ``selection`` is a :class:`~greedybn.search.ParentSelection` or a plain
    sequence of parent lists.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    parents = getattr(selection, "parents", selection)
    parents = tuple(tuple(sorted(ps)) for ps in parents)
    if len(parents) != table.n_cols:
        raise ValueError(f"expected {table.n_cols} parent sets, got {len(parents)}")
    if not is_acyclic(parents):
        raise CycleError("selection is cyclic; run repair_cycles first")
    if not table.is_complete():
        raise DataError("table has missing cells; impute first")
    cpts = []
    for i, ps in enumerate(parents):
        counts = family_counts(table, i, ps).counts.astype(np.float64)
        r = counts.shape[1]
        num = counts + alpha
        den = num.sum(axis=1, keepdims=True)
        cpt = np.divide(num, den, out=np.full_like(num, 1.0 / r), where=den > 0)
        cpts.append(cpt)
    return BayesNet(table.column_names, table.cardinalities, parents, tuple(cpts), table.codes)


def topological_order(net: BayesNet) -> list[int]:
    """Parents-before-children order, smallest index first among ready nodes."""
    return topological_sort(net.parents)


def moralize(net: BayesNet) -> MarkovNet:
    """Moral graph: skeleton plus an edge between every pair of co-parents."""
    edges = set()
    for child, ps in enumerate(net.parents):
        for p in ps:
            edges.add((min(p, child), max(p, child)))
        edges.update(itertools.combinations(ps, 2))
    return MarkovNet(net.node_names, frozenset(edges))
