"""Forward sampling, rejection-sampling queries and Hoeffding sample budgets."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from greedybn.exceptions import NoAcceptedSamples, QueryParseError
from greedybn.model import BayesNet, topological_order
from greedybn.scoring import config_index

HOEFFDING_MODES = ("paper_marginal", "paper_conditional", "standard")


@dataclass(frozen=True)
class HoeffdingSpec:
    """Accuracy ``epsilon`` and confidence parameter ``delta`` for a sample budget.

    ``p_event`` is the probability of the conditioning event; it is required
    by ``paper_conditional`` and turns ``standard`` into its conditional
    form.
    """

    epsilon: float
    delta: float
    mode: str = "standard"
    p_event: float | None = None

    def __post_init__(self):
        mode = self.mode.replace("-", "_")
        if mode not in HOEFFDING_MODES:
            raise ValueError(f"unknown Hoeffding mode {self.mode!r}; expected one of {HOEFFDING_MODES}")
        object.__setattr__(self, "mode", mode)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.p_event is not None and not 0 < self.p_event <= 1:
            raise ValueError("p_event must lie in (0, 1]")


def hoeffding_sample_size(spec: HoeffdingSpec) -> int:
    """Number of samples ``M`` for the requested bound.

    ``paper_marginal``
        ``ln(2/delta) / (2 epsilon)``, the printed marginal form (epsilon not squared).
    ``paper_conditional``
        ``3 ln(2/delta) / (p_event * 2 epsilon)``, the printed conditional form.
    ``standard``
        ``ln(2/delta) / (2 epsilon^2)``, divided by ``p_event`` when given so
        the expected number of accepted samples meets the marginal budget.
    """
    log_term = math.log(2.0 / spec.delta)
    if spec.mode == "paper_marginal":
        m = log_term / (2 * spec.epsilon)
    elif spec.mode == "paper_conditional":
        if spec.p_event is None:
            raise ValueError("paper_conditional mode needs p_event")
        m = 3 * log_term / (spec.p_event * 2 * spec.epsilon)
    else:
        m = log_term / (2 * spec.epsilon ** 2)
        if spec.p_event is not None:
            m /= spec.p_event
    return math.ceil(m)


@dataclass(frozen=True)
class QuerySpec:
    """``P(target | evidence)`` with node indices mapped to state indices.

    A node may appear on both sides; the estimate is then 1 or 0 depending on
    whether the two states agree.
    """

    target: dict
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.target:
            raise ValueError("query needs at least one target assignment")

    def check(self, net: BayesNet):
        for node, state in list(self.target.items()) + list(self.evidence.items()):
            if not 0 <= node < net.n_nodes:
                raise ValueError(f"node index {node} out of range")
            if not 0 <= state < net.cardinalities[node]:
                raise ValueError(f"state {state} out of range for node {net.node_names[node]!r}")


@dataclass(frozen=True)
class SampleBatch:
    samples: np.ndarray
    seed: int

    def __post_init__(self):
        self.samples.setflags(write=False)

    def __len__(self):
        return self.samples.shape[0]


def _sample_chunk(net: BayesNet, order, m: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((m, net.n_nodes), dtype=np.int64)
    cdfs = [np.cumsum(c, axis=1) for c in net.cpts]
    for v in order:
        ps = net.parents[v]
        rows = config_index(out[:, ps], [net.cardinalities[p] for p in ps]) if ps else np.zeros(m, dtype=np.int64)
        u = rng.random(m)
        # inverse CDF; the clip guards against rows summing to 1 - tiny
        state = (u[:, None] >= cdfs[v][rows]).sum(axis=1)
        out[:, v] = np.minimum(state, net.cardinalities[v] - 1)
    return out


def forward_sample(net: BayesNet, m: int, seed: int, chunk_size: int | None = None,
                   n_jobs: int = 1) -> SampleBatch:
    """Draw ``m`` joint samples, each node from its CPT in topological order.

    Chunk ``c`` is drawn from a generator seeded with ``(seed, c)``, so the
    batch depends on ``seed`` and ``chunk_size`` only, never on ``n_jobs``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if seed < 0:
        raise ValueError("seed must be >= 0")
    order = topological_order(net)
    chunk = m if chunk_size is None else max(1, int(chunk_size))
    sizes = [min(chunk, m - start) for start in range(0, m, chunk)]

    def draw(c):
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        return _sample_chunk(net, order, sizes[c], rng)

    if n_jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(draw, range(len(sizes))))
    else:
        parts = [draw(c) for c in range(len(sizes))]
    return SampleBatch(np.concatenate(parts, axis=0), seed)


def _match(samples: np.ndarray, assignment: dict) -> np.ndarray:
    mask = np.ones(samples.shape[0], dtype=bool)
    for node, state in assignment.items():
        mask &= samples[:, node] == state
    return mask


def estimate_marginal(batch: SampleBatch, target: dict) -> float:
    """Fraction of samples agreeing with every ``node: state`` pair in ``target``."""
    if len(batch) == 0:
        raise ValueError("empty sample batch")
    return float(_match(batch.samples, target).mean())


def rejection_query(net: BayesNet, query: QuerySpec, m: int, seed: int,
                    chunk_size: int | None = None) -> tuple[float, int]:
    """Estimate ``P(target | evidence)`` from ``m`` forward samples.

    Returns ``(estimate, accepted)``.

    Raises
    ------
    NoAcceptedSamples
        If no sample is consistent with the evidence.
    """
    query.check(net)
    batch = forward_sample(net, m, seed, chunk_size)
    kept = batch.samples[_match(batch.samples, query.evidence)]
    accepted = kept.shape[0]
    if accepted == 0:
        raise NoAcceptedSamples(m)
    return float(_match(kept, query.target).mean()), accepted


_QUERY_RE = re.compile(r"^P\((?P<body>[^()]*)\)$")
_TERM_RE = re.compile(r"^(?P<name>[^=,|()]+)=(?P<state>[+-]?\d+)$")
QUERY_GRAMMAR = "P(name=state[, name=state ...] [| name=state[, name=state ...]])"


def parse_query(text: str, net: BayesNet) -> QuerySpec:
    """Parse ``P(a=1, b=0 | c=2)`` into a :class:`QuerySpec`.

    Whitespace is ignored. States are raw labels when the network carries
    them, plain state indices otherwise.
    """
    compact = re.sub(r"\s+", "", text)
    found = _QUERY_RE.match(compact)
    if not found:
        raise QueryParseError(f"cannot parse {text!r}; expected {QUERY_GRAMMAR}")
    sides = found.group("body").split("|")
    if len(sides) > 2 or not sides[0]:
        raise QueryParseError(f"cannot parse {text!r}; expected {QUERY_GRAMMAR}")
    parsed = [_parse_terms(side, net, text) for side in sides]
    if len(parsed) == 2 and not parsed[1]:
        raise QueryParseError(f"empty evidence after '|' in {text!r}; expected {QUERY_GRAMMAR}")
    return QuerySpec(parsed[0], parsed[1] if len(parsed) == 2 else {})


def _parse_terms(side: str, net: BayesNet, text: str) -> dict:
    out = {}
    for term in side.split(",") if side else []:
        found = _TERM_RE.match(term)
        if not found:
            raise QueryParseError(f"bad term {term!r} in {text!r}; expected {QUERY_GRAMMAR}")
        name, raw = found.group("name"), int(found.group("state"))
        if name not in net.node_names:
            raise QueryParseError(f"unknown node {name!r}; valid names: {', '.join(net.node_names)}")
        node = net.node_names.index(name)
        if net.states is not None:
            labels = net.states[node]
            if raw not in labels:
                raise QueryParseError(f"node {name!r} has no state {raw}; valid states: {list(labels)}")
            state = labels.index(raw)
        else:
            if not 0 <= raw < net.cardinalities[node]:
                raise QueryParseError(
                    f"node {name!r} has no state {raw}; valid states: 0..{net.cardinalities[node] - 1}"
                )
            state = raw
        if node in out and out[node] != state:
            raise QueryParseError(f"node {name!r} assigned twice in {text!r}")
        out[node] = state
    return out
