"""Dataset ingestion, vertical column splitting and seeded train/test partitioning."""

import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from bdfl.config.settings import DatasetConfig, DatasetSource
from bdfl.data.exceptions import (
    DatasetNotFoundError,
    EmptyDatasetError,
    InvalidSplitError,
    NonNumericCellError,
    UnmappedLabelError,
)
from bdfl.models.dataset import RawTable, SplitSpec, VerticalDataset

logger = logging.getLogger(__name__)

DEFAULT_LABEL_MAPPING = {"0": -1, "1": 1}

ColumnRef = Union[int, str]


def _label_key(value: object) -> str:
    """Normalize a label cell so '1', '1.0' and 1 all match mapping key '1'."""
    text = str(value).strip()
    try:
        number = float(text)
    except ValueError:
        return text
    if number.is_integer():
        return str(int(number))
    return text


def _resolve_column(columns: list[str], ref: ColumnRef, path: str) -> str:
    if isinstance(ref, int):
        try:
            return columns[ref]
        except IndexError:
            raise InvalidSplitError(f"column index {ref} out of range for '{path}'") from None
    if ref not in columns:
        raise InvalidSplitError(f"column '{ref}' not found in '{path}'")
    return ref


def load_csv(
    path: str,
    label_column: ColumnRef = -1,
    label_mapping: Optional[dict[str, int]] = None,
    has_header: bool = True,
    drop_columns: Sequence[ColumnRef] = (),
) -> RawTable:
    """Read a comma-separated file into a dense feature matrix and {-1,+1} labels.

    Raises:
        DatasetNotFoundError: if the file does not exist.
        NonNumericCellError: on the first feature cell that is not a number.
        UnmappedLabelError: if a label value is missing from label_mapping.
    """
    csv_path = Path(path)
    if not csv_path.is_file():
        raise DatasetNotFoundError(str(csv_path))

    mapping = {_label_key(k): v for k, v in (label_mapping or DEFAULT_LABEL_MAPPING).items()}

    df = pd.read_csv(
        csv_path,
        header=0 if has_header else None,
        dtype=str,
        keep_default_na=False,
        skipinitialspace=True,
    )
    df.columns = [str(c) for c in df.columns]
    columns = list(df.columns)

    label_name = _resolve_column(columns, label_column, str(csv_path))
    dropped = {_resolve_column(columns, ref, str(csv_path)) for ref in drop_columns}
    feature_names = [c for c in columns if c != label_name and c not in dropped]
    if not feature_names:
        raise EmptyDatasetError(f"no feature columns left in '{csv_path}'")

    features = df[feature_names].apply(pd.to_numeric, errors="coerce")
    bad = features.isna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        # +1 for 1-based rows, +1 more when a header line precedes the data.
        raise NonNumericCellError(
            str(csv_path), int(row) + 1 + int(has_header), feature_names[col],
            df[feature_names[col]].iloc[row],
        )

    keys = df[label_name].map(_label_key)
    unmapped = sorted(set(keys) - set(mapping))
    if unmapped:
        raise UnmappedLabelError(unmapped, mapping)
    y = keys.map(mapping).to_numpy(dtype=np.float64)

    X = features.to_numpy(dtype=np.float64)
    logger.info("Loaded %s: %d rows x %d features", csv_path.name, X.shape[0], X.shape[1])
    return RawTable(X=X, y=y, feature_names=feature_names)


def split_and_standardize(
    raw: RawTable,
    spec: SplitSpec,
    test_fraction: float = 0.2,
    standardize: bool = True,
) -> VerticalDataset:
    """Shuffle, hold out floor(T * test_fraction) rows, z-score on train, route columns.

    Zero-variance train columns are dropped (with a warning) when standardizing.
    """
    T, N = raw.X.shape
    if T == 0:
        raise EmptyDatasetError("table has no rows")
    if not spec.covers(N):
        raise InvalidSplitError(
            f"party columns must partition 0..{N - 1}; "
            f"got A={spec.party_a_columns} B={spec.party_b_columns}"
        )
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in [0, 1), got {test_fraction}")

    if spec.shuffle:
        order = np.random.default_rng(spec.seed).permutation(T)
    else:
        order = np.arange(T)
    n_test = int(math.floor(T * test_fraction))
    train_idx, test_idx = order[: T - n_test], order[T - n_test:]
    X_train, X_test = raw.X[train_idx], raw.X[test_idx]

    kept = list(range(N))
    stats: dict[int, tuple[float, float]] = {}
    dropped: list[int] = []
    if standardize:
        mean = X_train.mean(axis=0)
        std = X_train.std(axis=0)
        for j in range(N):
            if std[j] == 0.0:
                dropped.append(j)
                logger.warning(
                    "Dropping zero-variance column %d (%s)", j, raw.feature_names[j]
                )
            else:
                stats[j] = (float(mean[j]), float(std[j]))
        kept = [j for j in range(N) if j not in dropped]
        X_train = X_train.copy()
        X_test = X_test.copy()
        for j in kept:
            mu, sd = stats[j]
            X_train[:, j] = (X_train[:, j] - mu) / sd
            X_test[:, j] = (X_test[:, j] - mu) / sd

    cols_a = [j for j in spec.party_a_columns if j in kept]
    cols_b = [j for j in spec.party_b_columns if j in kept]
    assignment = [(j, "A") for j in cols_a] + [(j, "B") for j in cols_b]

    return VerticalDataset(
        X_a=X_train[:, cols_a],
        X_b=X_train[:, cols_b],
        y=raw.y[train_idx],
        X_a_test=X_test[:, cols_a],
        X_b_test=X_test[:, cols_b],
        y_test=raw.y[test_idx],
        feature_assignment=assignment,
        standardization=[stats[j] for j, _ in assignment] if standardize else [],
        dropped_columns=dropped,
    )


def synthetic_dataset(
    T: int,
    N_A: int,
    N_B: int,
    seed: int,
    separation: float = 3.0,
    test_fraction: float = 0.2,
) -> VerticalDataset:
    """Two Gaussian classes at +/- separation/2 along a planted unit direction.

    The planted weight vector (A features first) is kept on the dataset.
    """
    if T <= 0:
        raise EmptyDatasetError(f"synthetic dataset needs T > 0, got {T}")
    N = N_A + N_B
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(N)
    norm = np.linalg.norm(direction)
    direction = direction / norm if norm > 0 else direction
    y = np.where(rng.random(T) < 0.5, -1.0, 1.0)
    X = rng.standard_normal((T, N)) + np.outer(y, direction) * (separation / 2.0)

    raw = RawTable(X=X, y=y, feature_names=[f"x{j}" for j in range(N)])
    spec = SplitSpec(
        party_a_columns=list(range(N_A)),
        party_b_columns=list(range(N_A, N)),
        seed=seed,
        shuffle=True,
    )
    dataset = split_and_standardize(raw, spec, test_fraction, standardize=False)
    dataset.planted_weights = direction
    return dataset


def default_party_a_columns(n_features: int) -> list[int]:
    """First ceil(N/2) features go to A (12 of 23 for the credit-card file)."""
    return list(range(math.ceil(n_features / 2)))


def build_dataset(cfg: DatasetConfig, seed: int) -> VerticalDataset:
    """Build the VerticalDataset described by a dataset config block."""
    if cfg.source == DatasetSource.SYNTHETIC:
        return synthetic_dataset(
            cfg.samples, cfg.features_a, cfg.features_b, seed,
            separation=cfg.separation, test_fraction=cfg.test_fraction,
        )

    raw = load_csv(
        cfg.path,
        label_column=cfg.label_column,
        label_mapping=cfg.label_mapping,
        has_header=cfg.has_header,
        drop_columns=cfg.drop_columns,
    )
    if cfg.subsample is not None and cfg.subsample < raw.X.shape[0]:
        rows = np.sort(np.random.default_rng(seed).choice(raw.X.shape[0], cfg.subsample, replace=False))
        raw = RawTable(X=raw.X[rows], y=raw.y[rows], feature_names=raw.feature_names)
        logger.info("Subsampled %s to %d rows", cfg.name, cfg.subsample)

    n_features = raw.X.shape[1]
    if cfg.party_a_columns is not None:
        cols_a = list(cfg.party_a_columns)
    elif cfg.party_a_count is not None:
        cols_a = list(range(cfg.party_a_count))
    else:
        cols_a = default_party_a_columns(n_features)
    cols_b = [j for j in range(n_features) if j not in set(cols_a)]

    spec = SplitSpec(party_a_columns=cols_a, party_b_columns=cols_b, seed=seed, shuffle=cfg.shuffle)
    dataset = split_and_standardize(raw, spec, cfg.test_fraction, standardize=cfg.standardize)
    logger.info("Prepared %s: %r", cfg.name, dataset)
    return dataset
