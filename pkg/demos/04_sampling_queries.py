"""Forward sampling and rejection queries with Hoeffding-sized budgets."""

# %%
from greedybn import (
    BayesNet,
    HoeffdingSpec,
    estimate_marginal,
    forward_sample,
    hoeffding_sample_size,
    parse_query,
    rejection_query,
)

# %%
# Rain -> WetGrass <- Sprinkler
net = BayesNet(
    ["Rain", "Sprinkler", "WetGrass"], [2, 2, 2], [(), (), (0, 1)],
    [
        [[0.8, 0.2]],
        [[0.6, 0.4]],
        [[0.99, 0.01], [0.1, 0.9], [0.2, 0.8], [0.01, 0.99]],
    ],
)

# %%
for mode, delta in (("paper_marginal", 0.985), ("standard", 0.015)):
    print(mode, hoeffding_sample_size(HoeffdingSpec(0.015, delta, mode)))

# %%
m = hoeffding_sample_size(HoeffdingSpec(0.015, 0.015))
batch = forward_sample(net, m, seed=7)
print("P(WetGrass=1) ~", estimate_marginal(batch, {2: 1}))

# %% [markdown]
# Explaining away: once the grass is wet, learning the sprinkler was on
# lowers the chance of rain.

# %%
for text in ("P(Rain=1 | WetGrass=1)", "P(Rain=1 | WetGrass=1, Sprinkler=1)"):
    q = parse_query(text, net)
    est, accepted = rejection_query(net, q, m, seed=11)
    print(f"{text:<38} {est:.4f}  (accepted {accepted}/{m})")
