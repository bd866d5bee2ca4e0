import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greedybn.dataset import (
    MISSING,
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
)
from greedybn.exceptions import DataError, NonIntegerCellError, TableParseError


def _csv(header, rows):
    return ",".join(header) + "\n" + "\n".join(",".join(str(v) for v in r) for r in rows) + "\n"


class TestParseTable:
    def test_two_by_two(self):
        t = parse_table("a,b\n0,1\n1,0\n")
        assert t.n_rows == 2 and t.n_cols == 2
        assert t.cardinalities == (2, 2)
        assert t.column_names == ("a", "b")

    def test_minus_one_is_missing_by_default(self):
        t = parse_table("a,b\n-1,1\n0,0\n")
        assert t.data[0, 0] == MISSING
        assert t.cardinalities == (1, 2)

    def test_ninety_nine_is_missing_by_default(self):
        t = parse_table("a\n99\n3\n")
        assert t.data[0, 0] == MISSING

    def test_custom_missing_codes(self):
        t = parse_table("a\n-99\n3\n", PreprocessConfig(missing_codes={-99}))
        assert t.data[0, 0] == MISSING

    def test_dense_reindex(self):
        t = parse_table("a\n3\n7\n3\n")
        assert t.cardinalities == (2,)
        assert t.data[:, 0].tolist() == [0, 1, 0]
        assert t.codes == ((3, 7),)

    def test_ragged_row_reports_line(self):
        with pytest.raises(TableParseError) as err:
            parse_table("a,b\n0,1\n1\n")
        assert err.value.line == 3

    def test_non_integer_cell(self):
        with pytest.raises(NonIntegerCellError) as err:
            parse_table("a,b\n0,x\n")
        assert err.value.line == 2 and err.value.column == "b"

    def test_empty_input(self):
        with pytest.raises(TableParseError):
            parse_table("")

    def test_round_trip_csv(self):
        text = "a,b\n3,10\n7,-1\n3,12\n"
        t = parse_table(text)
        assert t.to_csv() == text

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.integers(-5, 50), min_size=3, max_size=3), min_size=1, max_size=30))
    def test_reindex_is_lossless(self, rows):
        cfg = PreprocessConfig(missing_codes=set())
        t = parse_table(_csv(["a", "b", "c"], rows), cfg)
        assert t.decode().tolist() == rows


class TestDropNoisyRows:
    def _table(self, n_missing, n_cols=13):
        row = [MISSING] * n_missing + [0] * (n_cols - n_missing)
        return from_array(np.array([row, [0] * n_cols]), cardinalities=[1] * n_cols)

    def test_seven_missing_dropped(self):
        assert drop_noisy_rows(self._table(7), 6).n_rows == 1

    def test_exactly_six_kept(self):
        assert drop_noisy_rows(self._table(6), 6).n_rows == 2

    def test_no_missing_noop(self):
        t = from_array([[0, 1], [1, 0]])
        out = drop_noisy_rows(t, 6)
        assert np.array_equal(out.data, t.data)

    def test_order_preserved(self):
        data = np.array([[0, 0], [MISSING, MISSING], [1, 1], [0, 1]])
        out = drop_noisy_rows(from_array(data, cardinalities=[2, 2]), 1)
        assert out.data.tolist() == [[0, 0], [1, 1], [0, 1]]

    def test_idempotent(self, rng):
        data = rng.integers(-1, 2, size=(40, 8))
        t = from_array(data, cardinalities=[2] * 8)
        once = drop_noisy_rows(t, 3)
        assert np.array_equal(drop_noisy_rows(once, 3).data, once.data)


class TestDropSparseColumns:
    def _table(self, n_missing, n=100):
        col = np.zeros(n, dtype=int)
        col[:n_missing] = MISSING
        return from_array(np.column_stack([col, np.zeros(n, dtype=int)]), ["sparse", "full"], [1, 1])

    def test_96_percent_dropped(self):
        out = drop_sparse_columns(self._table(96), 0.95)
        assert out.column_names == ("full",)
        assert out.dropped_columns == ("sparse",)

    def test_exactly_95_percent_kept(self):
        assert drop_sparse_columns(self._table(95), 0.95).n_cols == 2

    def test_full_column_kept(self):
        assert "full" in drop_sparse_columns(self._table(100), 0.95).column_names

    def test_idempotent(self):
        once = drop_sparse_columns(self._table(97), 0.95)
        twice = drop_sparse_columns(once, 0.95)
        assert twice.column_names == once.column_names
        assert twice.dropped_columns == once.dropped_columns


class TestImpute:
    def test_empirical_marginal(self):
        # observed [0,0,0,1]; impute many cells and check P(0) ~ 0.75
        n_holes = 20000
        col = np.array([0, 0, 0, 1] + [MISSING] * n_holes)
        t = from_array(col[:, None], cardinalities=[2])
        out = impute_missing(t, seed=1)
        filled = out.data[4:, 0]
        assert set(np.unique(filled)) <= {0, 1}
        assert abs((filled == 0).mean() - 0.75) < 0.015

    def test_noop_without_missing(self):
        t = from_array([[0, 1], [1, 0]])
        assert np.array_equal(impute_missing(t, 3).data, t.data)

    def test_deterministic(self, rng):
        data = rng.integers(-1, 3, size=(50, 4))
        t = from_array(data, cardinalities=[3] * 4)
        assert np.array_equal(impute_missing(t, 9).data, impute_missing(t, 9).data)

    def test_all_missing_column_errors(self):
        t = from_array(np.array([[MISSING, 0], [MISSING, 1]]), cardinalities=[1, 2])
        with pytest.raises(DataError, match="drop"):
            impute_missing(t, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.integers(5, 60))
    def test_total_variation_bound(self, seed, n):
        rng = np.random.default_rng(seed)
        col = rng.integers(0, 3, size=n)
        col[rng.random(n) < 0.3] = MISSING
        if (col != MISSING).sum() == 0:
            col[0] = 0
        t = from_array(col[:, None], cardinalities=[3])
        out = impute_missing(t, seed)
        assert out.n_missing() == 0
        obs = col[col != MISSING]
        p_before = np.bincount(obs, minlength=3) / obs.size
        p_after = np.bincount(out.data[:, 0], minlength=3) / n
        tv = 0.5 * np.abs(p_before - p_after).sum()
        assert tv <= (col == MISSING).mean() + 1e-12


class TestConstantColumn:
    def test_ten_rows(self):
        t = from_array(np.zeros((10, 2), dtype=int), cardinalities=[1, 1])
        out = append_constant_column(t, "grade", 4)
        assert out.column_names[-1] == "grade"
        assert out.decode()[:, -1].tolist() == [4] * 10
        assert out.cardinalities[-1] == 1

    def test_entropy_zero(self, rng):
        t = from_array(rng.integers(0, 3, size=(30, 2)))
        out = append_constant_column(t, "grade", 4)
        assert column_entropy(out, out.n_cols - 1) == 0.0

    def test_empty_table(self):
        t = from_array(np.zeros((0, 2), dtype=int), cardinalities=[2, 2])
        out = append_constant_column(t, "g", 1)
        assert out.n_rows == 0 and out.n_cols == 3

    def test_duplicate_name(self):
        t = from_array([[0, 1]])
        with pytest.raises(ValueError):
            append_constant_column(t, "X0", 1)


class TestEntropy:
    @pytest.mark.parametrize("col, expected", [
        ([2, 2, 2, 2], 0.0),
        ([0, 1, 0, 1], 1.0),
        ([0, 0, 1, 1, 2, 2, 3, 3], 2.0),
    ])
    def test_values(self, col, expected):
        t = from_array(np.array(col)[:, None])
        assert column_entropy(t, 0) == pytest.approx(expected, abs=1e-12)

    def test_missing_errors(self):
        t = from_array(np.array([[0], [MISSING]]), cardinalities=[1])
        with pytest.raises(DataError, match="impute"):
            column_entropy(t, 0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=40))
    def test_bounds(self, col):
        t = from_array(np.array(col)[:, None], cardinalities=[5])
        h = column_entropy(t, 0)
        k = len(set(col))
        assert 0.0 <= h <= math.log2(5) + 1e-12
        assert (h == 0.0) == (k == 1)
        counts = np.bincount(col)
        counts = counts[counts > 0]
        if np.all(counts == counts[0]):
            assert h == pytest.approx(math.log2(k), abs=1e-12)

    def test_report_csv(self):
        t = from_array([[0, 0], [1, 0]], ["a", "b"])
        rep = entropy_report(t)
        assert rep.to_csv() == "column,entropy_bits\na,1.000000\nb,0.000000\n"
        assert "entropy_bits" in rep.to_text()


class TestEntropyDifference:
    def test_identical(self):
        r = EntropyReport(("a", "b"), (1.0, 0.5))
        assert entropy_difference(r, r) == [0.0, 0.0]

    def test_subtraction(self):
        a = EntropyReport(("a", "b"), (1.0, 0.5))
        b = EntropyReport(("a", "b"), (0.4, 0.5))
        assert entropy_difference(a, b) == pytest.approx([0.6, 0.0])

    def test_antisymmetry(self):
        a = EntropyReport(("a", "b"), (1.0, 0.25))
        b = EntropyReport(("a", "b"), (0.4, 0.5))
        assert entropy_difference(b, a) == [-x for x in entropy_difference(a, b)]

    def test_mismatch_lists_columns(self):
        a = EntropyReport(("a", "b"), (1.0, 0.5))
        b = EntropyReport(("a", "c"), (1.0, 0.5))
        with pytest.raises(ValueError, match="'b'.*'c'"):
            entropy_difference(a, b)


def test_preprocess_pipeline_summary():
    header = [f"F{i}" for i in range(13)] + ["sparse"]
    rows = [[0] * 14 for _ in range(40)]
    rows[0][:7] = [-1] * 7  # 7 missing -> dropped
    for r in rows:
        r[13] = -1
    rows[5][2] = 99
    t = parse_table(_csv(header, [[v if v != 0 else (i % 2) for v in r] for i, r in enumerate(rows)]))
    out, summary = preprocess(t, PreprocessConfig(), [("grade", 3)])
    assert summary.rows_dropped == 1
    assert summary.columns_dropped == ["sparse"]
    assert summary.cells_imputed == 1
    assert out.n_missing() == 0
    assert out.column_names[-1] == "grade"
