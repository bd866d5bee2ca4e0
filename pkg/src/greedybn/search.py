"""Parent-set search: the flexible greedy learner plus exact oracles.

The greedy learner grows parent sets one variable per round. Each node keeps
a *grade* (patience counter) and an *eligible* flag; a node that stops
improving by a relative margin, or runs out of grade, receives no further
candidates. Because every node is optimised on its own, the union of the
chosen parent sets can contain cycles; :func:`repair_cycles` removes the
cheapest cycle edges afterwards and :func:`refill_parents` re-adds parents
that fit into the repaired DAG.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from greedybn.dataset import DiscreteTable
from greedybn.exceptions import CycleError, DataError
from greedybn.graph import children_of, cycle_edges, descendants, is_acyclic
from greedybn.scoring import ScoreCache, ScoreSpec, local_score

#: Largest variable count accepted by :func:`exact_search_dp` by default.
DP_MAX_VARS = 18
#: Largest variable count accepted by :func:`exhaustive_enumeration`.
ENUM_MAX_VARS = 5


@dataclass(frozen=True)
class SearchParams:
    """Greediness knobs of :func:`greedy_search`.

    potential_threshold
        A node stays open for more parents only if its latest improvement is
        at least this fraction of ``|previous best score|``. Lower values
        give longer, more thorough runs.
    initial_grade
        Number of non-improving rounds a node tolerates before it is closed.
    parent_fidelity
        Restrict each round's candidates to one-variable extensions of the
        node's previous parent set.
    max_parents
        Optional cap on parent set size.
    refill
        After cycle repair, let :func:`refill_parents` re-add single parents
        that raise the score without closing a cycle.
    """

    potential_threshold: float = 0.05
    initial_grade: int = 2
    parent_fidelity: bool = True
    max_parents: int | None = None
    score_spec: ScoreSpec = field(default_factory=ScoreSpec)
    refill: bool = True

    def __post_init__(self):
        if not self.potential_threshold >= 0:
            raise ValueError("potential_threshold must be >= 0")
        if self.initial_grade < 1:
            raise ValueError("initial_grade must be >= 1")
        if self.max_parents is not None and self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")

    def as_dict(self) -> dict:
        return {
            "potential_threshold": self.potential_threshold,
            "initial_grade": self.initial_grade,
            "parent_fidelity": self.parent_fidelity,
            "max_parents": self.max_parents,
            "refill": self.refill,
            "score": self.score_spec.label(),
        }


@dataclass(frozen=True)
class NodeSearchState:
    """Per-node bookkeeping of the greedy loop.

    ``frontier`` is the parent set the next round extends when parent
    fidelity is on. It equals ``best_parents`` unless the node's last round
    failed to improve, in which case it is that round's best (losing) set:
    a node with grade left gets to push one parent further before giving up.
    """

    node: int
    best_parents: tuple
    best_score: float
    grade: int
    eligible: bool
    frontier: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "best_parents", tuple(sorted(self.best_parents)))
        if self.frontier is None:
            object.__setattr__(self, "frontier", self.best_parents)
        else:
            object.__setattr__(self, "frontier", tuple(sorted(self.frontier)))
        if self.grade <= 0 and self.eligible:
            raise ValueError("a node with grade 0 cannot be eligible")


@dataclass(frozen=True)
class ParentSelection:
    parents: tuple
    scores: tuple

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(tuple(sorted(ps)) for ps in self.parents))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.parents) != len(self.scores):
            raise ValueError("parents and scores differ in length")

    @property
    def total_score(self) -> float:
        return sum(self.scores)

    @property
    def is_acyclic(self) -> bool:
        return is_acyclic(self.parents)

    @property
    def n_edges(self) -> int:
        return sum(len(ps) for ps in self.parents)

    def edges(self) -> list[tuple[int, int]]:
        """``(parent, child)`` pairs sorted by child then parent."""
        return [(p, c) for c, ps in enumerate(self.parents) for p in ps]


@dataclass
class RoundRecord:
    round: int
    eligible_before: tuple
    evaluated: dict
    cache_hits: int
    eligible_after: tuple
    score_deltas: tuple
    best_scores: tuple

    @property
    def candidates(self) -> int:
        return sum(self.evaluated.values())

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "candidates": self.candidates,
            "cache_hits": self.cache_hits,
            "eligible_before": list(self.eligible_before),
            "eligible_after": list(self.eligible_after),
            "evaluated": {str(k): v for k, v in sorted(self.evaluated.items())},
            "score_deltas": list(self.score_deltas),
            "best_scores": list(self.best_scores),
        }


@dataclass
class SearchTrace:
    """Round-by-round log of a search. Holds no timing data, so it is reproducible."""

    method: str
    params: dict
    initial_scores: tuple = ()
    rounds: list = field(default_factory=list)
    pre_repair_score: float | None = None
    post_repair_score: float | None = None
    removed_edges: list = field(default_factory=list)
    refill_score: float | None = None
    added_edges: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "params": self.params,
            "initial_scores": list(self.initial_scores),
            "rounds": [r.to_dict() for r in self.rounds],
            "pre_repair_score": self.pre_repair_score,
            "post_repair_score": self.post_repair_score,
            "removed_edges": [list(e) for e in self.removed_edges],
            "refill_score": self.refill_score,
            "added_edges": [list(e) for e in self.added_edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"method={self.method} " + " ".join(f"{k}={v}" for k, v in self.params.items())]
        if self.initial_scores:
            lines.append(f"round=0 candidates={len(self.initial_scores)} "
                         f"total={sum(self.initial_scores):.6f}")
        for r in self.rounds:
            deltas = ",".join(f"{d:.6f}" for d in r.score_deltas)
            lines.append(
                f"round={r.round} candidates={r.candidates} cache_hits={r.cache_hits} "
                f"eligible={len(r.eligible_after)} deltas=[{deltas}]"
            )
        if self.pre_repair_score is not None:
            lines.append(f"pre_repair_score={self.pre_repair_score:.6f}")
        if self.post_repair_score is not None:
            lines.append(f"post_repair_score={self.post_repair_score:.6f}")
        if self.removed_edges:
            lines.append("removed_edges=" + ",".join(f"{p}->{c}" for p, c in self.removed_edges))
        if self.refill_score is not None:
            lines.append(f"refill_score={self.refill_score:.6f}")
        if self.added_edges:
            lines.append("added_edges=" + ",".join(f"{p}->{c}" for p, c in self.added_edges))
        return "\n".join(lines) + "\n"


def _check_table(table: DiscreteTable, min_cols: int = 1):
    if table.n_rows == 0:
        raise DataError("cannot learn from a table with zero rows")
    if table.n_cols < min_cols:
        raise DataError(f"need at least {min_cols} columns, table has {table.n_cols}")
    if not table.is_complete():
        raise DataError("table has missing cells; impute first")


def candidate_parent_sets(node: int, round: int, state: NodeSearchState,
                          params: SearchParams, n_vars: int) -> list[tuple]:
    """Parent sets of size ``round`` to score for ``node`` this round.

    With parent fidelity every candidate is ``state.frontier`` plus one more
    variable, so a frontier of the wrong size yields nothing. Without it all
    ``round``-subsets of the other variables are returned. Sets come out
    sorted and in lexicographic order.
    """
    if round < 1:
        raise ValueError("round must be >= 1")
    others = [v for v in range(n_vars) if v != node]
    if params.parent_fidelity:
        base = state.frontier
        if len(base) != round - 1:
            return []
        return sorted(tuple(sorted(base + (v,))) for v in others if v not in base)
    return [tuple(c) for c in itertools.combinations(others, round)]


def update_after_round(state: NodeSearchState, round_best_score: float, params: SearchParams,
                       round_best_parents: Sequence[int] | None = None) -> NodeSearchState:
    """Fold one round's best candidate into a node's state.

    A strictly better score is adopted; the node then stays open only if the
    gain is at least ``potential_threshold * |old score|``. Otherwise the
    grade drops by one and the node closes at grade 0.
    """
    if round_best_score > state.best_score:
        gain = round_best_score - state.best_score
        parents = state.best_parents if round_best_parents is None else tuple(round_best_parents)
        return replace(
            state,
            best_parents=parents,
            best_score=round_best_score,
            eligible=gain >= params.potential_threshold * abs(state.best_score),
            frontier=parents,
        )
    grade = state.grade - 1
    frontier = state.frontier if round_best_parents is None else tuple(round_best_parents)
    return replace(state, grade=grade, eligible=state.eligible and grade > 0, frontier=frontier)


def greedy_search(table: DiscreteTable, params: SearchParams,
                  cache: ScoreCache | None = None) -> tuple[ParentSelection, SearchTrace]:
    """Run the greedy parent-set search.

    Round 0 scores every node with no parents. Round ``p`` scores
    size-``p`` candidates for the still-eligible nodes and keeps each node's
    best. The loop stops once no node is eligible or ``p`` reaches
    ``max_parents`` (or ``n - 1``). The returned selection may be cyclic.
    """
    _check_table(table, min_cols=2)
    spec = params.score_spec
    cache = ScoreCache() if cache is None else cache
    n = table.n_cols
    limit = n - 1 if params.max_parents is None else min(params.max_parents, n - 1)

    states = []
    for v in range(n):
        s0 = local_score(table, v, (), spec, cache).value
        states.append(NodeSearchState(v, (), s0, params.initial_grade, True))
    trace = SearchTrace("greedy", params.as_dict(), initial_scores=tuple(s.best_score for s in states))

    for rnd in range(1, limit + 1):
        eligible = tuple(s.node for s in states if s.eligible)
        if not eligible:
            break
        hits0 = cache.hits
        before = [s.best_score for s in states]
        evaluated = {}
        for v in eligible:
            cands = candidate_parent_sets(v, rnd, states[v], params, n)
            if not cands:
                continue
            evaluated[v] = len(cands)
            best_set, best_val = None, -math.inf
            for ps in cands:
                val = local_score(table, v, ps, spec, cache).value
                # candidates arrive in lexicographic order: ties keep the first
                if val > best_val:
                    best_set, best_val = ps, val
            states[v] = update_after_round(states[v], best_val, params, best_set)
        trace.rounds.append(RoundRecord(
            round=rnd,
            eligible_before=eligible,
            evaluated=evaluated,
            cache_hits=cache.hits - hits0,
            eligible_after=tuple(s.node for s in states if s.eligible),
            score_deltas=tuple(s.best_score - b for s, b in zip(states, before)),
            best_scores=tuple(s.best_score for s in states),
        ))

    selection = ParentSelection(tuple(s.best_parents for s in states), tuple(s.best_score for s in states))
    trace.pre_repair_score = selection.total_score
    return selection, trace


def repair_cycles(selection: ParentSelection, table: DiscreteTable, spec: ScoreSpec,
                  cache: ScoreCache | None = None) -> ParentSelection:
    """Delete edges until the selection is acyclic.

    Each step considers every edge that lies on some directed cycle and drops
    the one whose removal costs the least score (the child is rescored
    without that parent). Ties go to the smallest ``(child, parent)``.
    """
    parents = [tuple(ps) for ps in selection.parents]
    scores = list(selection.scores)
    while True:
        edges = cycle_edges(parents)
        if not edges:
            break
        best = None
        for child, p in edges:
            reduced = tuple(x for x in parents[child] if x != p)
            new = local_score(table, child, reduced, spec, cache).value
            loss = scores[child] - new
            if best is None or loss < best[0]:
                best = (loss, child, reduced, new)
        _, child, reduced, new = best
        parents[child] = reduced
        scores[child] = new
    return ParentSelection(tuple(parents), tuple(scores))


def refill_parents(selection: ParentSelection, table: DiscreteTable, spec: ScoreSpec,
                   max_parents: int | None = None, cache: ScoreCache | None = None) -> ParentSelection:
    """Hill-climb by single-parent additions that keep the graph acyclic.

    Each step adds the one edge ``u -> v`` with the largest strictly positive
    score gain among those that do not close a cycle and respect
    ``max_parents``; ties go to the smallest ``(v, u)``. Stops when no
    addition helps. The input must be acyclic.
    """
    if not selection.is_acyclic:
        raise CycleError("refill_parents needs an acyclic selection")
    parents = [tuple(ps) for ps in selection.parents]
    scores = list(selection.scores)
    n = len(parents)
    while True:
        kids = children_of(parents)
        best = None
        for v in range(n):
            if max_parents is not None and len(parents[v]) >= max_parents:
                continue
            below = descendants(kids, v)
            for u in range(n):
                if u in below or u in parents[v]:
                    continue
                grown = tuple(sorted(parents[v] + (u,)))
                new = local_score(table, v, grown, spec, cache).value
                gain = new - scores[v]
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, v, grown, new)
        if best is None:
            break
        _, v, grown, new = best
        parents[v] = grown
        scores[v] = new
    return ParentSelection(tuple(parents), tuple(scores))


def _mask_to_tuple(mask: int) -> tuple:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _all_local_scores(table, spec, max_parents, cache):
    """``ls[v][mask]`` for every parent mask excluding ``v``; -inf when over the cap."""
    n = table.n_cols
    full = 1 << n
    ls = np.full((n, full), -np.inf)
    for v in range(n):
        vbit = 1 << v
        for mask in range(full):
            if mask & vbit:
                continue
            ps = _mask_to_tuple(mask)
            if max_parents is not None and len(ps) > max_parents:
                continue
            ls[v, mask] = local_score(table, v, ps, spec, cache).value
    return ls


def exact_search_dp(table: DiscreteTable, spec: ScoreSpec, max_parents: int | None = None,
                    max_vars: int = DP_MAX_VARS, cache: ScoreCache | None = None) -> ParentSelection:
    """Globally optimal DAG by dynamic programming over variable subsets.

    For each node and candidate set ``C`` the best parent set inside ``C`` is
    tabulated; then the best network on each subset ``W`` picks a sink ``v``
    and combines the best network on ``W - v`` with ``v``'s best parents in
    ``W - v``. Exponential in the number of variables.
    """
    _check_table(table)
    n = table.n_cols
    if n > max_vars:
        raise DataError(f"{n} variables exceeds the exact-search cap of {max_vars}; use greedy_search")
    cache = ScoreCache() if cache is None else cache
    full = 1 << n
    ls = _all_local_scores(table, spec, max_parents, cache)

    # best parent set of v within each candidate mask
    bps = np.full((n, full), -np.inf)
    bpset = np.zeros((n, full), dtype=np.int64)
    for v in range(n):
        vbit = 1 << v
        for mask in range(full):
            if mask & vbit:
                continue
            best, best_set = ls[v, mask], mask
            rest = mask
            while rest:
                low = rest & -rest
                rest ^= low
                sub = mask ^ low
                val = bps[v, sub]
                if val > best or (val == best and val > -np.inf
                                  and _mask_to_tuple(int(bpset[v, sub])) < _mask_to_tuple(best_set)):
                    best, best_set = val, int(bpset[v, sub])
            bps[v, mask] = best
            bpset[v, mask] = best_set

    net = np.full(full, -np.inf)
    sink = np.full(full, -1, dtype=np.int64)
    net[0] = 0.0
    for w in range(1, full):
        best, best_v = -np.inf, -1
        for v in range(n):
            bit = 1 << v
            if not w & bit:
                continue
            val = net[w ^ bit] + bps[v, w ^ bit]
            if val > best:
                best, best_v = val, v
        net[w] = best
        sink[w] = best_v

    parents = [()] * n
    scores = [0.0] * n
    w = full - 1
    while w:
        v = int(sink[w])
        w ^= 1 << v
        ps_mask = int(bpset[v, w])
        parents[v] = _mask_to_tuple(ps_mask)
        scores[v] = float(ls[v, ps_mask])
    return ParentSelection(tuple(parents), tuple(scores))


def _acyclic_masks(pmask: Sequence[int], nodes: int) -> bool:
    remaining = nodes
    while remaining:
        rest = remaining
        removed = False
        while rest:
            low = rest & -rest
            rest ^= low
            v = low.bit_length() - 1
            if not pmask[v] & remaining:
                remaining ^= low
                removed = True
        if not removed:
            return False
    return True


def enumerate_dags(n: int) -> Iterator[tuple]:
    """Yield every labelled DAG on ``n`` nodes as a tuple of parent bitmasks."""
    pmask = [0] * n
    others = [[m for m in range(1 << n) if not m & (1 << v)] for v in range(n)]

    def rec(i):
        if i == n:
            yield tuple(pmask)
            return
        for m in others[i]:
            pmask[i] = m
            if _acyclic_masks(pmask, (1 << (i + 1)) - 1):
                yield from rec(i + 1)
        pmask[i] = 0

    yield from rec(0)


def exhaustive_enumeration(table: DiscreteTable, spec: ScoreSpec,
                           cache: ScoreCache | None = None) -> tuple[ParentSelection, int]:
    """Score every labelled DAG and return the best one with the DAG count.

    Only for ``n <= 5`` (29281 DAGs at five variables).
    """
    _check_table(table)
    n = table.n_cols
    if n > ENUM_MAX_VARS:
        raise DataError(f"exhaustive enumeration supports at most {ENUM_MAX_VARS} variables, got {n}")
    cache = ScoreCache() if cache is None else cache
    ls = _all_local_scores(table, spec, None, cache)
    best, best_dag, count = -np.inf, None, 0
    for dag in enumerate_dags(n):
        count += 1
        total = sum(ls[v, m] for v, m in enumerate(dag))
        if total > best:
            best, best_dag = total, dag
    parents = tuple(_mask_to_tuple(m) for m in best_dag)
    scores = tuple(float(ls[v, m]) for v, m in enumerate(best_dag))
    return ParentSelection(parents, scores), count


def learn_structure(table: DiscreteTable, params: SearchParams, exact: bool = False,
                    max_vars: int = DP_MAX_VARS) -> tuple[ParentSelection, SearchTrace]:
    """Search (greedy or exact), repair cycles, then optionally refill.

    The trace records the score after each stage and the edges each stage
    removed or added.
    """
    cache = ScoreCache()
    if exact:
        selection = exact_search_dp(table, params.score_spec, params.max_parents, max_vars, cache)
        trace = SearchTrace("exact-dp", params.as_dict(), pre_repair_score=selection.total_score)
    else:
        selection, trace = greedy_search(table, params, cache)
    repaired = repair_cycles(selection, table, params.score_spec, cache)
    trace.post_repair_score = repaired.total_score
    trace.removed_edges = sorted(set(selection.edges()) - set(repaired.edges()))
    if params.refill and not exact:
        final = refill_parents(repaired, table, params.score_spec, params.max_parents, cache)
        trace.refill_score = final.total_score
        trace.added_edges = sorted(set(final.edges()) - set(repaired.edges()))
        return final, trace
    return repaired, trace
