"""Dataset models: raw tables, column splits and the vertically partitioned dataset."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


class SplitSpec(BaseModel):
    """Which global feature columns each data party owns."""

    party_a_columns: list[int]
    party_b_columns: list[int]
    seed: int = Field(default=0, ge=0, lt=2**64)
    shuffle: bool = True

    @model_validator(mode="after")
    def _disjoint(self) -> "SplitSpec":
        overlap = set(self.party_a_columns) & set(self.party_b_columns)
        if overlap:
            raise ValueError(f"columns assigned to both parties: {sorted(overlap)}")
        for cols in (self.party_a_columns, self.party_b_columns):
            if len(set(cols)) != len(cols):
                raise ValueError("duplicate column index in split")
        return self

    def covers(self, n_features: int) -> bool:
        return sorted(self.party_a_columns + self.party_b_columns) == list(range(n_features))


class RawTable:
    """Dense feature matrix plus {-1,+1} labels, row order as read. Not Pydantic (numpy)."""

    __slots__ = ("X", "y", "feature_names")

    def __init__(self, X: np.ndarray, y: np.ndarray, feature_names: list[str]):
        self.X = X
        self.y = y
        self.feature_names = feature_names

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def __repr__(self) -> str:
        return f"RawTable({self.X.shape[0]} rows x {self.X.shape[1]} features)"


class VerticalDataset:
    """Train/test data split by columns between Host A and Guest B.

    `feature_assignment` lists (global column index, party) in global order,
    A-features first within the weight vector convention w = (w_A, w_B).
    """

    __slots__ = (
        "X_a", "X_b", "y",
        "X_a_test", "X_b_test", "y_test",
        "feature_assignment", "standardization", "dropped_columns",
        "planted_weights",
    )

    def __init__(
        self,
        X_a: np.ndarray,
        X_b: np.ndarray,
        y: np.ndarray,
        X_a_test: np.ndarray,
        X_b_test: np.ndarray,
        y_test: np.ndarray,
        feature_assignment: list[tuple[int, str]],
        standardization: Optional[list[tuple[float, float]]] = None,
        dropped_columns: Optional[list[int]] = None,
        planted_weights: Optional[np.ndarray] = None,
    ):
        if X_a.shape[0] != X_b.shape[0] or X_a.shape[0] != y.shape[0]:
            raise ValueError(
                f"train row counts disagree: A={X_a.shape[0]} B={X_b.shape[0]} y={y.shape[0]}"
            )
        if X_a_test.shape[0] != X_b_test.shape[0] or X_a_test.shape[0] != y_test.shape[0]:
            raise ValueError("test row counts disagree between parties")
        self.X_a = X_a
        self.X_b = X_b
        self.y = y
        self.X_a_test = X_a_test
        self.X_b_test = X_b_test
        self.y_test = y_test
        self.feature_assignment = feature_assignment
        self.standardization = standardization or []
        self.dropped_columns = dropped_columns or []
        self.planted_weights = planted_weights

    @property
    def n_train(self) -> int:
        return self.X_a.shape[0]

    @property
    def n_test(self) -> int:
        return self.X_a_test.shape[0]

    @property
    def n_features_a(self) -> int:
        return self.X_a.shape[1]

    @property
    def n_features_b(self) -> int:
        return self.X_b.shape[1]

    def full_train(self) -> np.ndarray:
        """Reassemble the training matrix in global column order."""
        order = sorted(range(len(self.feature_assignment)), key=lambda i: self.feature_assignment[i][0])
        stacked = np.hstack([self.X_a, self.X_b])
        return stacked[:, order]

    def __repr__(self) -> str:
        return (
            f"VerticalDataset(train={self.n_train}, test={self.n_test}, "
            f"A={self.n_features_a} cols, B={self.n_features_b} cols)"
        )
