"""Cleaning a categorical table and checking how much imputation moved each column."""

# %%
import numpy as np

from greedybn import (
    MISSING,
    PreprocessConfig,
    entropy_report,
    from_array,
    preprocess,
)
from greedybn.synthetic import random_bayesnet, sample_table

# %% [markdown]
# Start from a synthetic survey-like table and knock out cells at random.
# One column is almost entirely blank and a few rows are mostly blank.

# %%
net = random_bayesnet(10, seed=1)
clean = sample_table(net, 800, seed=2)
rng = np.random.default_rng(3)
data = clean.data.copy()
data[rng.random(data.shape) < 0.03] = MISSING
data[:12, :8] = MISSING
data[rng.random(len(data)) < 0.97, 9] = MISSING
raw = from_array(data, clean.column_names, clean.cardinalities)
print("missing cells:", raw.n_missing())

# %%
# defaults: drop rows with more than 6 blanks, columns more than 95% blank
table, summary = preprocess(raw, PreprocessConfig(seed=0), constant_columns=[("cohort", 1)])
print(summary)
print("shape after:", table.n_rows, "x", table.n_cols, "dropped:", table.dropped_columns)

# %%
# imputation draws from each column's observed marginal, so entropies should barely move
before = entropy_report(clean.select_rows(np.arange(12, clean.n_rows)))
after = entropy_report(table)
print(after.to_text())

# %%
b = dict(zip(before.column_names, before.per_column_entropy))
a = dict(zip(after.column_names, after.per_column_entropy))
for c in sorted(b.keys() & a.keys()):
    print(f"{c:>8}  {a[c] - b[c]:+.4f} bits")
print("appended constant column entropy:", a["cohort"])
