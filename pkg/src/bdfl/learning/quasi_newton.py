"""Quasi-Newton updates of an inverse-Hessian approximation C.

Newton's step w - lr * H^-1 g would need the Hessian inverse; the rules here
only ever update C from consecutive (w, g) pairs, so no matrix is inverted.
Each party keeps its own C over its local coordinates, i.e. the global
inverse Hessian is approximated block-diagonally.

    DFP:   C' = C + s s^T / (s^T y) - (C y)(C y)^T / (y^T C y)
    BFGS:  C'' = (I - rho s y^T) C (I - rho y s^T) + rho s s^T,  rho = 1 / (y^T s)
    BDFL:  alpha C' + (1 - alpha) C''

with s = w_new - w_old and y = g_new - g_old.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from bdfl.learning.exceptions import CurvatureError, DimensionMismatchError
from bdfl.models.training import OptimizerKind, StepSchedule

logger = logging.getLogger(__name__)

DEFAULT_CURVATURE_EPS = 1e-10
DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class CurvatureState:
    """Inverse-Hessian approximation plus the previous (w, g) snapshot."""

    C: np.ndarray
    prev_w: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    round: int = 0
    skipped: bool = False   # last advance() rejected the pair

    @classmethod
    def initial(cls, dim: int) -> CurvatureState:
        return cls(C=np.eye(dim))

    @property
    def has_snapshot(self) -> bool:
        return self.prev_w is not None


def _check_pair(C: np.ndarray, dw: np.ndarray, dg: np.ndarray) -> None:
    n = C.shape[0]
    if C.shape != (n, n) or dw.shape != (n,) or dg.shape != (n,):
        raise DimensionMismatchError(
            "curvature update", f"C {n}x{n}, vectors of length {n}", (C.shape, dw.shape, dg.shape)
        )


def _require_curvature(rule: str, dw: np.ndarray, dg: np.ndarray, eps: float) -> float:
    """Return s^T y, raising CurvatureError unless it exceeds eps * |s| |y|."""
    sy = float(dw @ dg)
    threshold = eps * float(np.linalg.norm(dw)) * float(np.linalg.norm(dg))
    if not sy > threshold:
        raise CurvatureError(rule, sy, threshold)
    return sy


def dfp_update(
    C: np.ndarray, dw: np.ndarray, dg: np.ndarray, eps: float = DEFAULT_CURVATURE_EPS
) -> np.ndarray:
    """Davidon-Fletcher-Powell rank-2 update; satisfies C' dg = dw."""
    C, dw, dg = np.asarray(C, float), np.asarray(dw, float), np.asarray(dg, float)
    _check_pair(C, dw, dg)
    sy = _require_curvature("DFP", dw, dg, eps)
    Cy = C @ dg
    yCy = float(dg @ Cy)
    if not yCy > 0.0:
        raise CurvatureError("DFP", yCy, 0.0)
    return C + np.outer(dw, dw) / sy - np.outer(Cy, Cy) / yCy


def bfgs_update(
    C: np.ndarray, dw: np.ndarray, dg: np.ndarray, eps: float = DEFAULT_CURVATURE_EPS
) -> np.ndarray:
    """Broyden-Fletcher-Goldfarb-Shanno inverse update; satisfies C'' dg = dw."""
    C, dw, dg = np.asarray(C, float), np.asarray(dw, float), np.asarray(dg, float)
    _check_pair(C, dw, dg)
    sy = _require_curvature("BFGS", dw, dg, eps)
    rho = 1.0 / sy
    Cy = C @ dg
    yCy = float(dg @ Cy)
    # Expanded product form; every term is symmetric in exact floating point.
    return (
        C
        - rho * (np.outer(dw, Cy) + np.outer(Cy, dw))
        + (rho * rho * yCy + rho) * np.outer(dw, dw)
    )


def bdfl_update(
    C: np.ndarray,
    dw: np.ndarray,
    dg: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    eps: float = DEFAULT_CURVATURE_EPS,
) -> np.ndarray:
    """alpha * DFP + (1 - alpha) * BFGS, both computed from the same C."""
    if alpha == 1.0:
        return dfp_update(C, dw, dg, eps)
    if alpha == 0.0:
        return bfgs_update(C, dw, dg, eps)
    return alpha * dfp_update(C, dw, dg, eps) + (1.0 - alpha) * bfgs_update(C, dw, dg, eps)


def update_curvature(
    C: np.ndarray,
    dw: np.ndarray,
    dg: np.ndarray,
    kind: OptimizerKind,
    alpha: float = DEFAULT_ALPHA,
    eps: float = DEFAULT_CURVATURE_EPS,
) -> np.ndarray:
    """Dispatch to the update rule of `kind`. GD leaves C untouched."""
    if kind is OptimizerKind.DFP:
        return dfp_update(C, dw, dg, eps)
    if kind is OptimizerKind.BFGS:
        return bfgs_update(C, dw, dg, eps)
    if kind is OptimizerKind.BDFL:
        return bdfl_update(C, dw, dg, alpha, eps)
    return C


def step(
    w: np.ndarray, g: np.ndarray, C: np.ndarray, lr: float, kind: OptimizerKind
) -> np.ndarray:
    """One parameter update: w - lr * g (GD) or w - lr * C g (quasi-Newton)."""
    w, g = np.asarray(w, float), np.asarray(g, float)
    if w.shape != g.shape:
        raise DimensionMismatchError("step", w.shape, g.shape)
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if kind is OptimizerKind.GD:
        return w - lr * g
    C = np.asarray(C, float)
    if C.shape != (w.shape[0], w.shape[0]):
        raise DimensionMismatchError("step", (w.shape[0], w.shape[0]), C.shape)
    return w - lr * (C @ g)


def advance(
    state: CurvatureState,
    w_new: np.ndarray,
    g_new: np.ndarray,
    kind: OptimizerKind,
    alpha: float = DEFAULT_ALPHA,
    curvature_eps: float = DEFAULT_CURVATURE_EPS,
) -> CurvatureState:
    """Fold the newest (w, g) pair into the curvature state.

    The first call only stores the snapshot (C stays identity). Later calls
    update C from the differences to the stored snapshot; a pair that fails
    the curvature condition keeps the previous C and sets `skipped`.
    """
    w_new = np.array(w_new, dtype=float)
    g_new = np.array(g_new, dtype=float)

    if not state.has_snapshot or kind is OptimizerKind.GD:
        return replace(state, prev_w=w_new, prev_g=g_new, round=state.round + 1, skipped=False)

    dw = w_new - state.prev_w
    dg = g_new - state.prev_g
    skipped = False
    try:
        C = update_curvature(state.C, dw, dg, kind, alpha, curvature_eps)
    except CurvatureError as exc:
        logger.debug("Curvature update skipped at round %d: %s", state.round + 1, exc)
        C = state.C
        skipped = True

    return CurvatureState(C=C, prev_w=w_new, prev_g=g_new, round=state.round + 1, skipped=skipped)


def lr_at(schedule: StepSchedule, k: int) -> float:
    """Learning rate for zero-based round index k."""
    if k < 0:
        raise ValueError(f"round index must be non-negative, got {k}")
    return schedule.lr0 / (1.0 + schedule.decay * k)


def weights_converged(w: np.ndarray, prev_w: Optional[np.ndarray], tol: float) -> bool:
    """True iff a previous round's weights exist and max |w - prev_w| < tol."""
    if prev_w is None:
        return False
    w = np.asarray(w, float)
    if w.size == 0:
        return True
    return float(np.max(np.abs(w - prev_w))) < tol
