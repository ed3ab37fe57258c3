"""Plaintext oracle: the federated round structure with encryption stripped.

Curvature stays block-diagonal (one C per party), exactly like the parties
keep it, so trajectories can be compared coordinate by coordinate.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from bdfl.config.settings import RunConfig
from bdfl.learning.evaluation import holdout_accuracy, train_exact_loss
from bdfl.learning.quasi_newton import CurvatureState, advance, lr_at, step, weights_converged
from bdfl.learning.taylor import (
    compute_d,
    compute_gradient_slice,
    compute_u,
    exact_residual,
    select_batch,
    taylor_loss,
)
from bdfl.models.dataset import VerticalDataset
from bdfl.models.training import MetricsRecord, OptimizerKind

logger = logging.getLogger(__name__)


@dataclass
class OracleState:
    """Full weight vector (A coordinates first) and the two curvature blocks."""

    w_full: np.ndarray
    n_a: int
    curvature_a: CurvatureState
    curvature_b: CurvatureState
    round: int = 0

    @classmethod
    def initial(cls, n_a: int, n_b: int) -> OracleState:
        return cls(
            w_full=np.zeros(n_a + n_b),
            n_a=n_a,
            curvature_a=CurvatureState.initial(n_a),
            curvature_b=CurvatureState.initial(n_b),
        )

    @property
    def w_a(self) -> np.ndarray:
        return self.w_full[: self.n_a]

    @property
    def w_b(self) -> np.ndarray:
        return self.w_full[self.n_a:]

    @property
    def C_A(self) -> np.ndarray:
        return self.curvature_a.C

    @property
    def C_B(self) -> np.ndarray:
        return self.curvature_b.C


@dataclass
class Trajectory:
    """Per-round history of a training run; weights are recorded after each update."""

    records: list[MetricsRecord] = field(default_factory=list)
    weights_a: list[np.ndarray] = field(default_factory=list)
    weights_b: list[np.ndarray] = field(default_factory=list)
    converged: bool = False

    @property
    def rounds_executed(self) -> int:
        return len(self.records)

    @property
    def taylor_losses(self) -> list[float]:
        return [r.taylor_loss for r in self.records]

    @property
    def exact_losses(self) -> list[float]:
        return [r.exact_loss for r in self.records]

    @property
    def accuracies(self) -> list[float]:
        return [r.test_accuracy for r in self.records]

    @property
    def final_w_a(self) -> np.ndarray:
        return self.weights_a[-1] if self.weights_a else np.zeros(0)

    @property
    def final_w_b(self) -> np.ndarray:
        return self.weights_b[-1] if self.weights_b else np.zeros(0)


def _accuracy_or_none(value: float):
    return None if math.isnan(value) else value


RoundCallback = Callable[[int, float], None]


def oracle_run(
    config: RunConfig, data: VerticalDataset, on_round: Optional[RoundCallback] = None
) -> Trajectory:
    """Run the configured optimizer on the Taylor loss without encryption."""
    kind = config.optimizer.kind
    alpha = config.optimizer.alpha
    eps = config.optimizer.curvature_eps
    training = config.training
    seed = config.run.seed

    state = OracleState.initial(data.n_features_a, data.n_features_b)
    trajectory = Trajectory()
    prev_a = prev_b = None

    logger.info(
        "Oracle run: %s, %d rounds, %d train rows", config.label(), training.rounds, data.n_train
    )
    for k in range(1, training.rounds + 1):
        started = time.perf_counter()
        rows = select_batch(k, data.n_train, training.batch_size, seed)
        X_a, X_b, y = data.X_a[rows], data.X_b[rows], data.y[rows]
        w_a, w_b = state.w_a.copy(), state.w_b.copy()

        u_a, u_b = compute_u(w_a, X_a), compute_u(w_b, X_b)
        loss = taylor_loss(u_a, u_b, y)
        d = compute_d(u_a + u_b, y)
        g_a = compute_gradient_slice(d, X_a)
        g_b = compute_gradient_slice(d, X_b)

        lr = lr_at(training.schedule, k - 1)
        state.curvature_a = advance(state.curvature_a, w_a, g_a, kind, alpha, eps)
        state.curvature_b = advance(state.curvature_b, w_b, g_b, kind, alpha, eps)
        new_a = step(w_a, g_a, state.C_A, lr, kind)
        new_b = step(w_b, g_b, state.C_B, lr, kind)
        state.w_full = np.concatenate([new_a, new_b])
        state.round = k

        trajectory.weights_a.append(new_a)
        trajectory.weights_b.append(new_b)
        trajectory.records.append(
            MetricsRecord(
                round=k,
                taylor_loss=loss,
                exact_loss=train_exact_loss(data, w_a, w_b),
                test_accuracy=_accuracy_or_none(holdout_accuracy(data, new_a, new_b)),
                lr=lr,
                curvature_skipped_a=state.curvature_a.skipped,
                curvature_skipped_b=state.curvature_b.skipped,
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
        )
        logger.debug("Oracle round %d: taylor loss %.6f", k, loss)
        if on_round is not None:
            on_round(k, loss)

        converged = weights_converged(new_a, prev_a, training.tol) and weights_converged(
            new_b, prev_b, training.tol
        )
        prev_a, prev_b = new_a, new_b
        if converged:
            trajectory.converged = True
            logger.info("Oracle converged after %d rounds", k)
            break

    return trajectory


def oracle_exact_gd(
    config: RunConfig, data: VerticalDataset, on_round: Optional[RoundCallback] = None
) -> Trajectory:
    """Full-batch GD on the exact logistic loss, recorded in the same schema.

    Used to measure how far the Taylor surrogate's optimum sits from the
    true one; optimizer settings other than the schedule are ignored.
    """
    training = config.training
    w_a = np.zeros(data.n_features_a)
    w_b = np.zeros(data.n_features_b)
    trajectory = Trajectory()

    logger.info("Exact-loss GD: %d rounds, %d train rows", training.rounds, data.n_train)
    for k in range(1, training.rounds + 1):
        started = time.perf_counter()
        u_a, u_b = compute_u(w_a, data.X_a), compute_u(w_b, data.X_b)
        residual = exact_residual(u_a + u_b, data.y)
        g_a = compute_gradient_slice(residual, data.X_a)
        g_b = compute_gradient_slice(residual, data.X_b)

        lr = lr_at(training.schedule, k - 1)
        new_a = step(w_a, g_a, None, lr, OptimizerKind.GD)
        new_b = step(w_b, g_b, None, lr, OptimizerKind.GD)

        trajectory.weights_a.append(new_a)
        trajectory.weights_b.append(new_b)
        trajectory.records.append(
            MetricsRecord(
                round=k,
                taylor_loss=taylor_loss(u_a, u_b, data.y),
                exact_loss=train_exact_loss(data, w_a, w_b),
                test_accuracy=_accuracy_or_none(holdout_accuracy(data, new_a, new_b)),
                lr=lr,
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
        )
        if on_round is not None:
            on_round(k, trajectory.records[-1].taylor_loss)

        converged = k > 1 and weights_converged(new_a, w_a, training.tol) and weights_converged(
            new_b, w_b, training.tol
        )
        w_a, w_b = new_a, new_b
        if converged:
            trajectory.converged = True
            logger.info("Exact-loss GD converged after %d rounds", k)
            break

    return trajectory
