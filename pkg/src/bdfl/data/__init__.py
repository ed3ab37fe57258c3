"""Dataset ingestion and vertical partitioning."""

from bdfl.data.loader import build_dataset, load_csv, split_and_standardize, synthetic_dataset

__all__ = ["build_dataset", "load_csv", "split_and_standardize", "synthetic_dataset"]
