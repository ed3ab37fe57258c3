"""Logistic-regression math in the second-order Taylor form.

Expanding log(1 + exp(-y u)) around u = 0 gives

    l(u, y) ~= log 2 - y u / 2 + u^2 / 8

whose residual d = (u - 2y) / 4 is linear in u, so loss and gradient only
need additions and plaintext multiplications. Everything here is plain
numpy; the federated parties run the same formulas over ciphertexts.
"""

import math
from typing import Optional

import numpy as np

from bdfl.learning.exceptions import DimensionMismatchError

LOG2 = math.log(2.0)

# Arrays: FeatureMatrix is (rows, cols); LabelVector holds -1/+1; WeightSlice is (cols,).
FeatureMatrix = np.ndarray
LabelVector = np.ndarray
WeightSlice = np.ndarray


def _same_length(operation: str, *vectors: np.ndarray) -> None:
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise DimensionMismatchError(operation, "equal lengths", sorted(lengths))


def compute_u(w: WeightSlice, X: FeatureMatrix) -> np.ndarray:
    """Per-sample linear predictor u[i] = w . x_i over the local columns."""
    w = np.asarray(w, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.shape[0]:
        raise DimensionMismatchError("compute_u", f"X with {w.shape[0]} columns", X.shape)
    return X @ w


def compute_d(u_total: np.ndarray, y: LabelVector) -> np.ndarray:
    """Taylor residual d[i] = (u_total[i] - 2 y_i) / 4."""
    u_total = np.asarray(u_total, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_length("compute_d", u_total, y)
    return (u_total - 2.0 * y) / 4.0


def compute_gradient_slice(d: np.ndarray, X: FeatureMatrix) -> np.ndarray:
    """g = (1/batch) * sum_i d[i] * x_i over this party's columns."""
    d = np.asarray(d, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != d.shape[0]:
        raise DimensionMismatchError("compute_gradient_slice", f"X with {d.shape[0]} rows", X.shape)
    if d.shape[0] == 0:
        return np.zeros(X.shape[1])
    return (X.T @ d) / d.shape[0]


def taylor_loss(u_a: np.ndarray, u_b: np.ndarray, y: LabelVector) -> float:
    """Mean Taylor loss with the square expanded as u_A^2 + 2 u_A u_B + u_B^2."""
    u_a = np.asarray(u_a, dtype=np.float64)
    u_b = np.asarray(u_b, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_length("taylor_loss", u_a, u_b, y)
    if y.shape[0] == 0:
        return LOG2
    per_sample = (
        LOG2
        - 0.5 * y * (u_a + u_b)
        + 0.125 * (u_a * u_a + 2.0 * u_a * u_b + u_b * u_b)
    )
    return float(per_sample.mean())


def exact_loss(u_total: np.ndarray, y: LabelVector) -> float:
    """Mean of log(1 + exp(-y u)), evaluated as softplus via logaddexp."""
    u_total = np.asarray(u_total, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_length("exact_loss", u_total, y)
    if y.shape[0] == 0:
        return LOG2
    return float(np.logaddexp(0.0, -y * u_total).mean())


def exact_residual(u_total: np.ndarray, y: LabelVector) -> np.ndarray:
    """d log(1 + exp(-y u)) / du = -y * sigmoid(-y u)."""
    u_total = np.asarray(u_total, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_length("exact_residual", u_total, y)
    # sigmoid(z) = (1 + tanh(z/2)) / 2 never overflows.
    return -y * 0.5 * (1.0 + np.tanh(-0.5 * y * u_total))


def predict(u_total: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Labels in {-1, +1}; ties (u == threshold) go to +1."""
    u_total = np.asarray(u_total, dtype=np.float64)
    return np.where(u_total >= threshold, 1.0, -1.0)


def accuracy(predicted: np.ndarray, y: LabelVector) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_length("accuracy", predicted, y)
    if y.shape[0] == 0:
        return float("nan")
    return float(np.mean(predicted == y))


def select_batch(round_index: int, n_rows: int, batch_size: Optional[int], seed: int) -> np.ndarray:
    """Row indices used in a round: all rows, or a seeded sample both parties can derive."""
    if batch_size is None or batch_size >= n_rows:
        return np.arange(n_rows)
    rng = np.random.default_rng([seed, round_index])
    return np.sort(rng.choice(n_rows, size=batch_size, replace=False))
