"""Harness-side evaluation of a weight pair on the train and test splits.

These functions see both parties' columns at once, so only the experiment
harness calls them; no federated party does.
"""

import numpy as np

from bdfl.learning.taylor import accuracy, compute_u, exact_loss, predict
from bdfl.models.dataset import VerticalDataset


def train_exact_loss(data: VerticalDataset, w_a: np.ndarray, w_b: np.ndarray) -> float:
    u = compute_u(w_a, data.X_a) + compute_u(w_b, data.X_b)
    return exact_loss(u, data.y)


def holdout_accuracy(data: VerticalDataset, w_a: np.ndarray, w_b: np.ndarray) -> float:
    """Accuracy on the held-out rows; nan when the test split is empty."""
    u = compute_u(w_a, data.X_a_test) + compute_u(w_b, data.X_b_test)
    return accuracy(predict(u), data.y_test)
