"""Small DAG utilities over parent lists (``parents[i]`` = parents of node i)."""

from __future__ import annotations

import heapq
from typing import Sequence

from greedybn.exceptions import CycleError


def children_of(parents: Sequence[Sequence[int]]) -> list[list[int]]:
    kids = [[] for _ in parents]
    for child, ps in enumerate(parents):
        for p in ps:
            kids[p].append(child)
    return kids


def topological_sort(parents: Sequence[Sequence[int]]) -> list[int]:
    """Kahn's algorithm, always releasing the smallest available index first.

    Raises
    ------
    CycleError
        If the parent relation has a directed cycle.
    """
    n = len(parents)
    indegree = [len(set(ps)) for ps in parents]
    kids = children_of([sorted(set(ps)) for ps in parents])
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for k in kids[node]:
            indegree[k] -= 1
            if indegree[k] == 0:
                heapq.heappush(ready, k)
    if len(order) != n:
        stuck = sorted(set(range(n)) - set(order))
        raise CycleError(f"directed cycle among nodes {stuck}")
    return order


def is_acyclic(parents: Sequence[Sequence[int]]) -> bool:
    try:
        topological_sort(parents)
    except CycleError:
        return False
    return True


def descendants(kids, start) -> set:
    """Nodes reachable from ``start`` (inclusive) given a children list."""
    seen = {start}
    stack = [start]
    while stack:
        for k in kids[stack.pop()]:
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return seen


def cycle_edges(parents: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    """All ``(child, parent)`` edges lying on at least one directed cycle.

    An edge ``p -> c`` is on a cycle exactly when ``p`` is reachable from ``c``.
    """
    kids = children_of(parents)
    reach = {}
    edges = []
    for child, ps in enumerate(parents):
        for p in sorted(ps):
            if child not in reach:
                reach[child] = descendants(kids, child)
            if p in reach[child]:
                edges.append((child, p))
    return edges
