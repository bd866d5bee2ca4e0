"""Local scores on a tiny family, and why BDeu treats A->B and B->A the same."""

# %%
import numpy as np

from greedybn import ScoreSpec, family_counts, from_array, local_score, network_score

# %% [markdown]
# Two binary columns where B mostly copies A.

# %%
rng = np.random.default_rng(0)
a = rng.integers(0, 2, 300)
b = np.where(rng.random(300) < 0.85, a, 1 - a)
table = from_array(np.column_stack([a, b]), ["A", "B"])

fc = family_counts(table, 1, [0])
print("N_ijk for B given A:\n", fc.counts)

# %%
for spec in (ScoreSpec("aic"), ScoreSpec("bic"), ScoreSpec("bdeu", ess=1.0), ScoreSpec("bdeu", ess=20.0)):
    empty = local_score(table, 1, (), spec)
    with_a = local_score(table, 1, (0,), spec)
    print(f"{spec.label():>12}: B alone {empty.value:10.3f}   B|A {with_a.value:10.3f}")

# %% [markdown]
# Markov-equivalent graphs get identical totals, shown here for BIC and BDeu.

# %%
for spec in (ScoreSpec("bic"), ScoreSpec("bdeu", ess=20.0)):
    ab = network_score(table, [(), (0,)], spec)
    ba = network_score(table, [(1,), ()], spec)
    print(f"{spec.label():>12}: A->B {ab:.9f}  B->A {ba:.9f}")
