"""Greedy and exact structure learning for discrete Bayesian networks."""

from greedybn.dataset import (
    MISSING,
    DiscreteTable,
    EntropyReport,
    PreprocessConfig,
    append_constant_column,
    column_entropy,
    drop_noisy_rows,
    drop_sparse_columns,
    entropy_difference,
    entropy_report,
    from_array,
    impute_missing,
    parse_table,
    preprocess,
    read_table,
)
from greedybn.exceptions import (
    CycleError,
    DataError,
    GreedyBNError,
    NoAcceptedSamples,
    NonIntegerCellError,
    QueryParseError,
    TableParseError,
)
from greedybn.inference import (
    HoeffdingSpec,
    QuerySpec,
    SampleBatch,
    estimate_marginal,
    forward_sample,
    hoeffding_sample_size,
    parse_query,
    rejection_query,
)
from greedybn.model import BayesNet, MarkovNet, fit_cpts, moralize, topological_order
from greedybn.scoring import (
    FamilyCounts,
    LocalScore,
    ScoreCache,
    ScoreSpec,
    bdeu_local_score,
    family_counts,
    local_score,
    log_likelihood_term,
    network_score,
    penalty_term,
)
from greedybn.search import (
    NodeSearchState,
    ParentSelection,
    SearchParams,
    SearchTrace,
    candidate_parent_sets,
    exact_search_dp,
    exhaustive_enumeration,
    greedy_search,
    learn_structure,
    refill_parents,
    repair_cycles,
    update_after_round,
)

__version__ = "0.1.0"
