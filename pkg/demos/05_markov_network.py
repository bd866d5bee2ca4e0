"""Learn a network, fit CPTs, moralize it and write Graphviz files."""

# %%
from pathlib import Path

from greedybn import SearchParams, fit_cpts, learn_structure, moralize
from greedybn.synthetic import random_bayesnet, sample_table

# %%
truth = random_bayesnet(7, seed=5, max_parents=2)
table = sample_table(truth, 2000, seed=6)
selection, _ = learn_structure(table, SearchParams())
net = fit_cpts(table, selection, alpha=1.0)

print("true edges:   ", sorted(truth.edges()))
print("learned edges:", sorted(net.edges()))

# %%
markov = moralize(net)
married = markov.edges - {tuple(sorted(e)) for e in net.edges()}
print("edges added by marrying co-parents:", sorted(married))

# %%
out = Path("demo_output")
out.mkdir(exist_ok=True)
(out / "network.dot").write_text(net.to_dot())
(out / "markov.dot").write_text(markov.to_dot())
(out / "model.json").write_text(net.to_json())
print("wrote", *sorted(p.name for p in out.iterdir()))
