"""Independent oracles shared by the test modules.

Nothing here calls the scoring or search code under test: joint counts are
tallied over the full variable space and marginalised, scores are evaluated
with plain ``math`` loops, and network probabilities come from enumerating
every joint assignment.
"""

import itertools
import math

import numpy as np
import pytest

from greedybn.dataset import from_array


def joint_counts(data, cards):
    counts = np.zeros(cards, dtype=np.int64)
    np.add.at(counts, tuple(data.T), 1)
    return counts


def family_matrix(joint, child, parents):
    """Marginalise the joint count array onto (sorted parents..., child) as q x r."""
    parents = sorted(parents)
    keep = parents + [child]
    drop = tuple(a for a in range(joint.ndim) if a not in keep)
    marg = joint.sum(axis=drop) if drop else joint
    # remaining axes are in ascending index order; move child to the end
    remaining = sorted(keep)
    order = [remaining.index(a) for a in keep]
    marg = np.transpose(marg, order)
    r = joint.shape[child]
    return marg.reshape(-1, r)


def oracle_family_score(mat, kind, n_rows, ess=1.0):
    q, r = mat.shape
    if kind == "bdeu":
        a_ij, a_ijk = ess / q, ess / (q * r)
        total = 0.0
        for row in mat.tolist():
            total += math.lgamma(a_ij) - math.lgamma(a_ij + sum(row))
            for n in row:
                total += math.lgamma(a_ijk + n) - math.lgamma(a_ijk)
        return total
    ll = 0.0
    for row in mat.tolist():
        tot = sum(row)
        for n in row:
            if n:
                ll += n * math.log(n / tot)
    w = 1.0 if kind == "aic" else math.log(n_rows) / 2
    return ll - q * (r - 1) * w


def oracle_network_score(table, parents, kind, ess=1.0):
    joint = joint_counts(table.data, table.cardinalities)
    return sum(
        oracle_family_score(family_matrix(joint, v, ps), kind, table.n_rows, ess)
        for v, ps in enumerate(parents)
    )


def robinson_dag_count(n):
    """Number of labelled DAGs on n nodes via Robinson's recurrence."""
    a = [1]
    for m in range(1, n + 1):
        a.append(sum((-1) ** (k + 1) * math.comb(m, k) * 2 ** (k * (m - k)) * a[m - k]
                     for k in range(1, m + 1)))
    return a[n]


def exact_joint_distribution(net):
    """Dict mapping every full assignment to its probability."""
    out = {}
    for assign in itertools.product(*[range(c) for c in net.cardinalities]):
        p = 1.0
        for v, ps in enumerate(net.parents):
            j = 0
            for u in ps:
                j = j * net.cardinalities[u] + assign[u]
            p *= net.cpts[v][j, assign[v]]
        out[assign] = p
    return out


def exact_probability(net, target, evidence=None):
    evidence = evidence or {}
    joint = exact_joint_distribution(net)
    num = den = 0.0
    for assign, p in joint.items():
        if all(assign[v] == s for v, s in evidence.items()):
            den += p
            if all(assign[v] == s for v, s in target.items()):
                num += p
    return num / den


def random_data_table(rng, n_vars, n_rows, card_range=(2, 4)):
    cards = rng.integers(card_range[0], card_range[1] + 1, size=n_vars)
    # mix independent noise with copied columns so there are real dependencies
    data = np.column_stack([rng.integers(0, c, size=n_rows) for c in cards])
    for v in range(1, n_vars):
        src = int(rng.integers(0, v))
        copy = rng.random(n_rows) < 0.6
        data[copy, v] = data[copy, src] % cards[v]
    return from_array(data, cardinalities=cards.tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one verdict line per acceptance criterion; shown in the terminal summary."""

    def emit(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
