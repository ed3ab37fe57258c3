"""Unit tests for dataset ingestion and vertical splitting."""

import numpy as np
import pytest

from bdfl.config.settings import DatasetConfig
from bdfl.data.exceptions import (
    DatasetNotFoundError,
    EmptyDatasetError,
    InvalidSplitError,
    NonNumericCellError,
    UnmappedLabelError,
)
from bdfl.data.loader import (
    build_dataset,
    default_party_a_columns,
    load_csv,
    split_and_standardize,
    synthetic_dataset,
)
from bdfl.models.dataset import RawTable, SplitSpec


class TestLoadCsv:
    """Tests for load_csv."""

    def test_reads_features_and_maps_labels(self, toy_csv):
        raw = load_csv(str(toy_csv), label_column="label")
        assert raw.shape == (8, 3)
        assert raw.feature_names == ["f0", "f1", "f2"]
        np.testing.assert_array_equal(raw.y, [1, -1, 1, -1, 1, -1, 1, -1])

    def test_label_by_index_and_float_keys(self, tmp_path):
        path = tmp_path / "floats.csv"
        path.write_text("1.0,2.0,1.0\n3.0,4.0,0.0\n")
        raw = load_csv(str(path), label_column=-1, has_header=False)
        np.testing.assert_array_equal(raw.y, [1.0, -1.0])

    def test_drop_columns(self, toy_csv):
        raw = load_csv(str(toy_csv), label_column="label", drop_columns=["f1"])
        assert raw.feature_names == ["f0", "f2"]

    def test_custom_mapping(self, tmp_path):
        path = tmp_path / "diag.csv"
        path.write_text("id,diagnosis,a\n1,M,0.5\n2,B,0.7\n")
        raw = load_csv(str(path), label_column=1, label_mapping={"M": 1, "B": -1}, drop_columns=[0])
        np.testing.assert_array_equal(raw.y, [1.0, -1.0])
        assert raw.feature_names == ["a"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetNotFoundError):
            load_csv(str(tmp_path / "absent.csv"))

    def test_non_numeric_cell_reports_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,label\n1,2,1\n3,oops,0\n")
        with pytest.raises(NonNumericCellError) as exc_info:
            load_csv(str(path), label_column="label")
        assert exc_info.value.row == 3
        assert exc_info.value.column == "b"

    def test_unmapped_label(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a,label\n1,1\n2,2\n")
        with pytest.raises(UnmappedLabelError) as exc_info:
            load_csv(str(path), label_column="label")
        assert exc_info.value.values == ["2"]

    def test_unknown_label_column(self, toy_csv):
        with pytest.raises(InvalidSplitError):
            load_csv(str(toy_csv), label_column="target")


class TestSplit:
    """Tests for split_and_standardize."""

    def _raw(self, rows=20, cols=4, seed=0):
        draw = np.random.default_rng(seed)
        X = draw.standard_normal((rows, cols)) * 3.0 + 5.0
        y = np.where(draw.random(rows) < 0.5, -1.0, 1.0)
        return RawTable(X, y, [f"c{j}" for j in range(cols)])

    def test_holdout_size_is_floor(self):
        spec = SplitSpec(party_a_columns=[0, 1], party_b_columns=[2, 3], seed=1)
        data = split_and_standardize(self._raw(rows=19), spec, test_fraction=0.2)
        assert data.n_test == 3
        assert data.n_train == 16

    def test_train_columns_standardized(self):
        spec = SplitSpec(party_a_columns=[0, 1], party_b_columns=[2, 3], seed=1)
        data = split_and_standardize(self._raw(), spec, test_fraction=0.2)
        full = data.full_train()
        assert np.all(np.abs(full.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(full.std(axis=0) - 1.0) < 1e-9)

    def test_split_is_seeded(self):
        spec = SplitSpec(party_a_columns=[0], party_b_columns=[1, 2, 3], seed=9)
        a = split_and_standardize(self._raw(), spec)
        b = split_and_standardize(self._raw(), spec)
        np.testing.assert_array_equal(a.X_a, b.X_a)
        np.testing.assert_array_equal(a.y_test, b.y_test)

    def test_columns_routed_to_owners(self):
        raw = self._raw()
        spec = SplitSpec(party_a_columns=[3, 1], party_b_columns=[0, 2], seed=1, shuffle=False)
        data = split_and_standardize(raw, spec, test_fraction=0.0, standardize=False)
        np.testing.assert_array_equal(data.X_a, raw.X[:, [3, 1]])
        np.testing.assert_array_equal(data.X_b, raw.X[:, [0, 2]])
        np.testing.assert_array_equal(data.full_train(), raw.X)

    def test_zero_variance_column_dropped(self):
        raw = self._raw()
        raw.X[:, 2] = 4.0
        spec = SplitSpec(party_a_columns=[0, 1], party_b_columns=[2, 3], seed=1)
        data = split_and_standardize(raw, spec)
        assert data.dropped_columns == [2]
        assert data.n_features_b == 1

    def test_partition_must_cover_columns(self):
        spec = SplitSpec(party_a_columns=[0], party_b_columns=[1], seed=1)
        with pytest.raises(InvalidSplitError):
            split_and_standardize(self._raw(cols=3), spec)

    def test_overlapping_columns_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(party_a_columns=[0, 1], party_b_columns=[1, 2])

    def test_empty_table(self):
        spec = SplitSpec(party_a_columns=[0], party_b_columns=[1])
        with pytest.raises(EmptyDatasetError):
            split_and_standardize(RawTable(np.zeros((0, 2)), np.zeros(0), ["a", "b"]), spec)


class TestBuildDataset:
    """Tests for the config-driven entry point."""

    def test_synthetic_source(self):
        data = build_dataset(DatasetConfig(samples=50, features_a=2, features_b=3), seed=3)
        assert (data.n_features_a, data.n_features_b) == (2, 3)
        assert data.n_train + data.n_test == 50
        assert data.planted_weights.shape == (5,)

    def test_csv_source_with_party_count(self, toy_csv):
        cfg = DatasetConfig(source="csv", path=str(toy_csv), label_column="label", party_a_count=1)
        data = build_dataset(cfg, seed=3)
        assert (data.n_features_a, data.n_features_b) == (1, 2)

    def test_subsample(self, toy_csv):
        cfg = DatasetConfig(source="csv", path=str(toy_csv), label_column="label", subsample=4,
                            test_fraction=0.25)
        data = build_dataset(cfg, seed=3)
        assert data.n_train + data.n_test == 4

    def test_default_split_gives_a_the_larger_half(self):
        assert default_party_a_columns(23) == list(range(12))

    def test_zero_feature_party(self):
        data = synthetic_dataset(20, 0, 3, seed=1)
        assert data.n_features_a == 0
        assert data.X_a.shape == (data.n_train, 0)
