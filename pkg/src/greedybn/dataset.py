"""Categorical tables: CSV ingest, cleaning, imputation and entropy reports.

Cells are stored as dense state indices in ``[0, cardinality)``; the raw
integer code behind every index is kept per column so a cleaned table can be
written back out with its original labels.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from greedybn.exceptions import DataError, TableParseError, NonIntegerCellError

#: Internal marker for a missing cell.
MISSING = -1


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for the cleaning pipeline.

    ``missing_codes`` are raw values treated as missing. A row is dropped when
    it has *more than* ``row_drop_threshold`` missing cells, a column when its
    missing fraction is *more than* ``column_drop_fraction``.
    """

    missing_codes: frozenset = frozenset({-1, 99})
    row_drop_threshold: int = 6
    column_drop_fraction: float = 0.95
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "missing_codes", frozenset(int(c) for c in self.missing_codes))
        if self.row_drop_threshold < 0:
            raise ValueError("row_drop_threshold must be >= 0")
        if not 0.0 <= self.column_drop_fraction <= 1.0:
            raise ValueError("column_drop_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class DiscreteTable:
    """A fully categorical data matrix.

    Attributes
    ----------
    column_names : tuple of str
    cardinalities : tuple of int
        Number of valid states per column (at least 1).
    data : numpy.ndarray
        ``(n_rows, n_cols)`` int64 array of state indices, ``MISSING`` for
        absent cells.
    codes : tuple of tuple of int
        ``codes[j][k]`` is the raw value behind state ``k`` of column ``j``.
    dropped_columns : tuple of str
        Names removed by :func:`drop_sparse_columns` along the way.
    """

    column_names: tuple
    cardinalities: tuple
    data: np.ndarray
    codes: tuple
    dropped_columns: tuple = ()

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.int64)
        if data.ndim != 2:
            data = data.reshape(-1, len(self.column_names))
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        object.__setattr__(self, "codes", tuple(tuple(int(v) for v in c) for c in self.codes))
        n_cols = len(self.column_names)
        if len(self.cardinalities) != n_cols or len(self.codes) != n_cols or data.shape[1] != n_cols:
            raise ValueError("column_names, cardinalities, codes and data disagree on column count")
        if len(set(self.column_names)) != n_cols:
            raise ValueError("duplicate column names")
        for j, card in enumerate(self.cardinalities):
            if card < 1:
                raise ValueError(f"column {self.column_names[j]!r} has cardinality {card} < 1")
            col = data[:, j]
            bad = (col != MISSING) & ((col < 0) | (col >= card))
            if bad.any():
                raise ValueError(f"column {self.column_names[j]!r} has states outside [0, {card})")

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @property
    def missing_mask(self) -> np.ndarray:
        return self.data == MISSING

    def n_missing(self) -> int:
        return int(self.missing_mask.sum())

    def is_complete(self) -> bool:
        return not self.missing_mask.any()

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"unknown column {name!r}; valid names: {', '.join(self.column_names)}") from None

    def decode(self, missing_code: int | None = None) -> np.ndarray:
        """Map state indices back to raw codes.

        Missing cells become ``missing_code`` (default ``-1``).
        """
        fill = -1 if missing_code is None else missing_code
        out = np.full(self.data.shape, fill, dtype=np.int64)
        for j, codes in enumerate(self.codes):
            col = self.data[:, j]
            seen = col != MISSING
            if codes:
                out[seen, j] = np.asarray(codes, dtype=np.int64)[col[seen]]
        return out

    def to_csv(self, missing_code: int | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        writer.writerows(self.decode(missing_code).tolist())
        return buf.getvalue()

    def select_rows(self, keep: np.ndarray) -> "DiscreteTable":
        return replace(self, data=self.data[keep])


@dataclass(frozen=True)
class EntropyReport:
    column_names: tuple
    per_column_entropy: tuple

    def to_csv(self) -> str:
        lines = ["column,entropy_bits"]
        lines += [f"{n},{h:.6f}" for n, h in zip(self.column_names, self.per_column_entropy)]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max([len("column")] + [len(n) for n in self.column_names])
        lines = [f"{'column':<{width}}  entropy_bits"]
        lines += [f"{n:<{width}}  {h:12.6f}" for n, h in zip(self.column_names, self.per_column_entropy)]
        return "\n".join(lines) + "\n"


@dataclass
class PreprocessSummary:
    rows_dropped: int = 0
    columns_dropped: list = field(default_factory=list)
    cells_imputed: int = 0

    def to_text(self) -> str:
        cols = ",".join(self.columns_dropped) if self.columns_dropped else "-"
        return (
            f"rows_dropped={self.rows_dropped}\n"
            f"columns_dropped={len(self.columns_dropped)} ({cols})\n"
            f"cells_imputed={self.cells_imputed}\n"
        )


def from_array(values, column_names: Sequence[str] | None = None, cardinalities: Sequence[int] | None = None) -> DiscreteTable:
    """Wrap an integer array of state indices (no re-indexing, no missing codes).

    Handy for synthetic data where states already are ``0..k-1``; when
    ``cardinalities`` is omitted it is taken as ``max + 1`` per column.
    """
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D array")
    n_cols = arr.shape[1]
    if column_names is None:
        column_names = [f"X{j}" for j in range(n_cols)]
    if cardinalities is None:
        cardinalities = [int(arr[:, j].max()) + 1 if arr.shape[0] else 1 for j in range(n_cols)]
    codes = [tuple(range(c)) for c in cardinalities]
    return DiscreteTable(tuple(column_names), tuple(cardinalities), arr, tuple(codes))


def parse_table(csv_text: str, config: PreprocessConfig | None = None) -> DiscreteTable:
    """Parse integer CSV text into a :class:`DiscreteTable`.

    Raw values listed in ``config.missing_codes`` become ``MISSING``; the
    remaining distinct values of each column are re-indexed in ascending
    order to ``0..k-1``.
    """
    config = config or PreprocessConfig()
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise TableParseError("empty input, expected a header row", line=1) from None
    header = [h.strip() for h in header]
    if not header or any(h == "" for h in header):
        raise TableParseError("header has an empty column name", line=1)
    if len(set(header)) != len(header):
        raise TableParseError("header has duplicate column names", line=1)

    raw_rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise TableParseError(
                f"expected {len(header)} fields, found {len(row)}", line=lineno
            )
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(int(cell.strip()))
            except ValueError:
                raise NonIntegerCellError(
                    f"cell {cell!r} is not an integer", line=lineno, column=header[j]
                ) from None
        raw_rows.append(parsed)

    raw = np.array(raw_rows, dtype=np.int64).reshape(len(raw_rows), len(header))
    return _encode(header, raw, config.missing_codes)


def _encode(header, raw: np.ndarray, missing_codes) -> DiscreteTable:
    data = np.full(raw.shape, MISSING, dtype=np.int64)
    cards, codes = [], []
    missing = np.isin(raw, np.fromiter(missing_codes, dtype=np.int64, count=len(missing_codes)))
    for j in range(raw.shape[1]):
        seen = ~missing[:, j]
        values, inverse = np.unique(raw[seen, j], return_inverse=True)
        data[seen, j] = inverse.ravel()
        codes.append(tuple(int(v) for v in values))
        cards.append(max(len(values), 1))
    return DiscreteTable(tuple(header), tuple(cards), data, tuple(codes))


def read_table(path, config: PreprocessConfig | None = None) -> DiscreteTable:
    with open(path, newline="") as fh:
        return parse_table(fh.read(), config)


def drop_noisy_rows(table: DiscreteTable, threshold: int) -> DiscreteTable:
    """Remove rows with more than ``threshold`` missing cells."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    keep = table.missing_mask.sum(axis=1) <= threshold
    return table.select_rows(keep)


def drop_sparse_columns(table: DiscreteTable, fraction: float) -> DiscreteTable:
    """Remove columns whose missing proportion strictly exceeds ``fraction``.

    Names of removed columns are appended to ``dropped_columns``.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if table.n_rows == 0:
        return table
    share = table.missing_mask.mean(axis=0)
    keep = [j for j in range(table.n_cols) if not share[j] > fraction]
    dropped = tuple(table.column_names[j] for j in range(table.n_cols) if j not in keep)
    if not dropped:
        return table
    return DiscreteTable(
        tuple(table.column_names[j] for j in keep),
        tuple(table.cardinalities[j] for j in keep),
        table.data[:, keep],
        tuple(table.codes[j] for j in keep),
        table.dropped_columns + dropped,
    )


def impute_missing(table: DiscreteTable, seed: int) -> DiscreteTable:
    """Fill each missing cell by sampling its column's observed marginal.

    Cells are drawn independently; the result is a pure function of
    ``(table, seed)``.
    """
    if table.is_complete():
        return table
    rng = np.random.default_rng(seed)
    data = table.data.copy()
    for j in range(table.n_cols):
        col = data[:, j]
        holes = np.flatnonzero(col == MISSING)
        if holes.size == 0:
            continue
        observed = col[col != MISSING]
        if observed.size == 0:
            raise DataError(
                f"column {table.column_names[j]!r} has no observed values; "
                "drop it (drop_sparse_columns) before imputing"
            )
        freq = np.bincount(observed, minlength=table.cardinalities[j]) / observed.size
        col[holes] = rng.choice(table.cardinalities[j], size=holes.size, p=freq)
    return replace(table, data=data)


def append_constant_column(table: DiscreteTable, name: str, value: int) -> DiscreteTable:
    """Add a column holding the raw label ``value`` in every row.

    Inside this table the column has a single state (cardinality 1); ``value``
    is kept as that state's raw code so tables for different groups can still
    be told apart after concatenation.
    """
    if name in table.column_names:
        raise ValueError(f"column {name!r} already exists")
    data = np.concatenate([table.data, np.zeros((table.n_rows, 1), dtype=np.int64)], axis=1)
    return DiscreteTable(
        table.column_names + (name,),
        table.cardinalities + (1,),
        data,
        table.codes + ((int(value),),),
        table.dropped_columns,
    )


def column_entropy(table: DiscreteTable, column: int) -> float:
    """Shannon entropy of a column's empirical distribution, in bits."""
    col = table.data[:, column]
    if (col == MISSING).any():
        raise DataError(
            f"column {table.column_names[column]!r} has missing cells; impute before computing entropy"
        )
    if col.size == 0:
        return 0.0
    counts = np.bincount(col, minlength=table.cardinalities[column])
    p = counts[counts > 0] / col.size
    h = float(-(p * np.log2(p)).sum())
    # a single state gives -1*log2(1) == -0.0
    return h if h > 0.0 else 0.0


def entropy_report(table: DiscreteTable) -> EntropyReport:
    return EntropyReport(
        table.column_names,
        tuple(column_entropy(table, j) for j in range(table.n_cols)),
    )


def entropy_difference(report_a: EntropyReport, report_b: EntropyReport) -> list[float]:
    """Element-wise ``report_a - report_b``; both must list the same columns."""
    if tuple(report_a.column_names) != tuple(report_b.column_names):
        only_a = [c for c in report_a.column_names if c not in report_b.column_names]
        only_b = [c for c in report_b.column_names if c not in report_a.column_names]
        detail = f"only in first: {only_a}; only in second: {only_b}"
        if not only_a and not only_b:
            detail = "same columns in a different order"
        raise ValueError(f"entropy reports cover different columns ({detail})")
    return [a - b for a, b in zip(report_a.per_column_entropy, report_b.per_column_entropy)]


def preprocess(table: DiscreteTable, config: PreprocessConfig,
               constant_columns: Iterable[tuple[str, int]] = ()) -> tuple[DiscreteTable, PreprocessSummary]:
    """Run row drop, column drop, imputation and constant-column append in order."""
    summary = PreprocessSummary()
    out = drop_noisy_rows(table, config.row_drop_threshold)
    summary.rows_dropped = table.n_rows - out.n_rows
    before = len(out.dropped_columns)
    out = drop_sparse_columns(out, config.column_drop_fraction)
    summary.columns_dropped = list(out.dropped_columns[before:])
    summary.cells_imputed = out.n_missing()
    out = impute_missing(out, config.seed)
    for name, value in constant_columns:
        out = append_constant_column(out, name, value)
    return out, summary
