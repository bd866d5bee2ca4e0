"""Sufficient statistics and decomposable local scores (AIC, BIC, BDeu).

All scores are in natural-log units. A family is a child variable plus a
parent set; parent configurations are numbered in mixed radix over the
sorted parents with the smallest parent index as the most significant digit.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from greedybn.dataset import MISSING, DiscreteTable
from greedybn.exceptions import DataError

SCORE_KINDS = ("aic", "bic", "bdeu")

# Above this many q*r cells the tally goes through np.unique instead of a
# dense bincount.
_DENSE_LIMIT = 1 << 22


@dataclass(frozen=True)
class ScoreSpec:
    """Which score to use and its constants.

    Parameters
    ----------
    kind : {"aic", "bic", "bdeu"}
    ess : float
        Equivalent sample size for BDeu.
    n_rows : float, optional
        Sample size ``N`` in the BIC weight ``ln(N)/2``. ``None`` means the
        row count of the table being scored.
    """

    kind: str = "bic"
    ess: float = 1.0
    n_rows: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}; expected one of {SCORE_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "bdeu" and not self.ess > 0:
            raise ValueError("BDeu requires ess > 0")
        if self.n_rows is not None and not self.n_rows >= 1:
            raise ValueError("n_rows must be >= 1")

    def penalty_weight(self, n_rows: float) -> float:
        if self.kind == "aic":
            return 1.0
        if self.kind == "bic":
            n = self.n_rows if self.n_rows is not None else n_rows
            return math.log(n) / 2.0
        raise ValueError("BDeu has no penalty weight")

    def label(self) -> str:
        return f"bdeu(ess={self.ess:g})" if self.kind == "bdeu" else self.kind


@dataclass(frozen=True)
class FamilyCounts:
    """Counts ``N_ijk`` for one family.

    Only parent configurations that occur in the data are stored
    (``configs`` and ``observed``); unobserved rows are all zero and add
    nothing to any of the scores. ``counts`` expands to the full ``q x r``
    matrix on demand.
    """

    child: int
    parents: tuple
    q: int
    r: int
    configs: np.ndarray
    observed: np.ndarray

    @property
    def counts(self) -> np.ndarray:
        full = np.zeros((self.q, self.r), dtype=np.int64)
        full[self.configs] = self.observed
        return full

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def n(self) -> int:
        return int(self.observed.sum())


@dataclass(frozen=True)
class LocalScore:
    child: int
    parents: tuple
    value: float


def config_index(columns: np.ndarray, cards: Sequence[int]) -> np.ndarray:
    """Mixed-radix configuration index of each row; first column most significant."""
    idx = np.zeros(columns.shape[0], dtype=np.int64)
    for j, card in enumerate(cards):
        idx *= card
        idx += columns[:, j]
    return idx


def family_counts(table: DiscreteTable, child: int, parents: Sequence[int]) -> FamilyCounts:
    parents = tuple(sorted(int(p) for p in parents))
    n_cols = table.n_cols
    if not 0 <= child < n_cols or any(not 0 <= p < n_cols for p in parents):
        raise IndexError(f"variable index out of range for a {n_cols}-column table")
    if child in parents:
        raise ValueError(f"variable {child} cannot be its own parent")
    if len(set(parents)) != len(parents):
        raise ValueError("duplicate parent indices")
    cols = list(parents) + [child]
    sub = table.data[:, cols]
    if (sub == MISSING).any():
        raise DataError("family has missing cells; impute the table first")

    r = table.cardinalities[child]
    pcards = [table.cardinalities[p] for p in parents]
    q = math.prod(pcards)
    if q * r > _DENSE_LIMIT:
        codes, inverse = np.unique(sub[:, :-1], axis=0, return_inverse=True)
        inverse = inverse.ravel()
        observed = np.zeros((codes.shape[0], r), dtype=np.int64)
        np.add.at(observed, (inverse, sub[:, -1]), 1)
        configs = config_index(codes, pcards)
    else:
        cell = config_index(sub[:, :-1], pcards) * r + sub[:, -1]
        dense = np.bincount(cell, minlength=q * r).reshape(q, r)
        configs = np.flatnonzero(dense.sum(axis=1))
        observed = dense[configs]
    return FamilyCounts(child, parents, q, r, configs, observed)


def log_likelihood_term(counts: FamilyCounts) -> float:
    """``sum_jk N_ijk ln(N_ijk / N_ij)`` with ``0 ln 0 = 0``."""
    obs = counts.observed.astype(np.float64)
    totals = obs.sum(axis=1, keepdims=True)
    nz = obs > 0
    ratio = np.divide(obs, totals, out=np.ones_like(obs), where=nz)
    return float((obs * np.log(ratio)).sum())


def penalty_term(counts: FamilyCounts) -> int:
    """Free parameter count ``q (r - 1)``."""
    return counts.q * (counts.r - 1)


def bdeu_local_score(counts: FamilyCounts, ess: float) -> float:
    if not ess > 0:
        raise ValueError("ess must be > 0")
    a_ij = ess / counts.q
    a_ijk = a_ij / counts.r
    obs = counts.observed.astype(np.float64)
    n_ij = obs.sum(axis=1)
    value = (gammaln(a_ij) - gammaln(a_ij + n_ij)).sum()
    value += (gammaln(a_ijk + obs) - gammaln(a_ijk)).sum()
    return float(value)


def score_counts(counts: FamilyCounts, spec: ScoreSpec, n_rows: int) -> float:
    if spec.kind == "bdeu":
        return bdeu_local_score(counts, spec.ess)
    return log_likelihood_term(counts) - penalty_term(counts) * spec.penalty_weight(n_rows)


class ScoreCache:
    """Memo of local scores keyed by ``(child, sorted parents)``.

    A cache belongs to one table and one :class:`ScoreSpec`; reusing it with
    another raises ``ValueError``. Concurrent use is safe: values are
    deterministic, so duplicate computations just overwrite each other.
    """

    def __init__(self):
        self._store = {}
        self._owner = None
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._store)

    def _bind(self, table, spec):
        key = (id(table), spec)
        if self._owner is None:
            with self._lock:
                if self._owner is None:
                    self._owner = key
                    self._table = table  # keeps id(table) from being recycled
        if self._owner != key:
            raise ValueError("ScoreCache reused with a different table or ScoreSpec")

    def get(self, key):
        with self._lock:
            value = self._store.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, key, value):
        with self._lock:
            self._store[key] = value


def local_score(table: DiscreteTable, child: int, parents: Sequence[int],
                spec: ScoreSpec, cache: ScoreCache | None = None) -> LocalScore:
    """Score one family, going through ``cache`` when given."""
    if table.n_rows == 0:
        raise DataError("cannot score a table with zero rows")
    key = (int(child), tuple(sorted(int(p) for p in parents)))
    if cache is not None:
        cache._bind(table, spec)
        hit = cache.get(key)
        if hit is not None:
            return hit
    counts = family_counts(table, key[0], key[1])
    result = LocalScore(key[0], key[1], score_counts(counts, spec, table.n_rows))
    if cache is not None:
        cache.put(key, result)
    return result


def network_score(table: DiscreteTable, parent_sets: Sequence[Sequence[int]],
                  spec: ScoreSpec, cache: ScoreCache | None = None) -> float:
    """Sum of local scores; ``parent_sets[i]`` holds the parents of node ``i``."""
    if len(parent_sets) != table.n_cols:
        raise ValueError(f"expected {table.n_cols} parent sets, got {len(parent_sets)}")
    return sum(local_score(table, i, ps, spec, cache).value for i, ps in enumerate(parent_sets))
