class GreedyBNError(Exception):
    """Base class for errors raised by greedybn."""


class DataError(GreedyBNError, ValueError):
    """The data cannot be used for the requested operation."""


class TableParseError(DataError):
    """Malformed CSV input. ``line`` is 1-based; ``column`` is a header name."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class NonIntegerCellError(TableParseError):
    pass


class CycleError(GreedyBNError, ValueError):
    """A parent structure that must be acyclic contains a directed cycle."""


class NoAcceptedSamples(GreedyBNError):
    """Rejection sampling kept no sample consistent with the evidence."""

    def __init__(self, n_samples):
        self.n_samples = n_samples
        super().__init__(f"none of {n_samples} samples matched the evidence")


class QueryParseError(GreedyBNError, ValueError):
    pass
