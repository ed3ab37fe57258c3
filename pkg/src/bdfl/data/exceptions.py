"""Dataset exception classes."""


class DatasetNotFoundError(FileNotFoundError):
    """Raised when the configured dataset file does not exist."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"Dataset file not found: {path}")


class NonNumericCellError(ValueError):
    """Raised when a feature cell cannot be read as a number."""

    def __init__(self, path: str, row: int, column: str, value: object):
        self.path = path
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"Non-numeric cell in '{path}' at row {row}, column '{column}': {value!r}"
        )


class UnmappedLabelError(ValueError):
    """Raised when a label value has no entry in the label mapping."""

    def __init__(self, values: list[str], mapping: dict[str, int]):
        self.values = values
        self.mapping = mapping
        super().__init__(
            f"Label values {values} not in label_mapping {sorted(mapping)}"
        )


class EmptyDatasetError(ValueError):
    """Raised when a dataset would have no rows or no features."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Empty dataset: {reason}")


class InvalidSplitError(ValueError):
    """Raised when the column split does not partition the feature columns."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Invalid column split: {reason}")
