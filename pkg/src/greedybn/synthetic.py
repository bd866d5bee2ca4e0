"""Random networks and tables for tests, benchmarks and demos."""

from __future__ import annotations

import math

import numpy as np

from greedybn.dataset import DiscreteTable, from_array
from greedybn.inference import forward_sample
from greedybn.model import BayesNet


def random_bayesnet(n_vars: int, seed: int, max_parents: int = 2, cardinality=(2, 4),
                    edge_prob: float = 0.5, concentration: float = 1.0) -> BayesNet:
    """Random DAG (edges only from lower to higher index) with Dirichlet CPT rows.

    ``cardinality`` is an inclusive ``(low, high)`` range. Smaller
    ``concentration`` gives peakier CPTs and so stronger dependencies.
    """
    rng = np.random.default_rng(seed)
    lo, hi = cardinality
    cards = rng.integers(lo, hi + 1, size=n_vars).tolist()
    parents = []
    for v in range(n_vars):
        pool = [u for u in range(v) if rng.random() < edge_prob]
        rng.shuffle(pool)
        parents.append(tuple(sorted(pool[:max_parents])))
    cpts = []
    for v in range(n_vars):
        q = math.prod(cards[p] for p in parents[v])
        cpts.append(rng.dirichlet(np.full(cards[v], concentration), size=q))
    names = [f"X{v}" for v in range(n_vars)]
    return BayesNet(names, cards, parents, cpts)


def sample_table(net: BayesNet, n_rows: int, seed: int) -> DiscreteTable:
    """Forward-sample ``n_rows`` complete rows; cardinalities follow the network."""
    batch = forward_sample(net, n_rows, seed)
    return from_array(batch.samples, net.node_names, net.cardinalities)


def random_table(n_vars: int, n_rows: int, seed: int, **net_kwargs) -> DiscreteTable:
    return sample_table(random_bayesnet(n_vars, seed, **net_kwargs), n_rows, seed + 1)
