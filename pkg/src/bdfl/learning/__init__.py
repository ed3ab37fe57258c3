"""Taylor-approximated logistic regression, quasi-Newton updates and the plaintext oracle."""

from bdfl.learning.evaluation import holdout_accuracy, train_exact_loss
from bdfl.learning.oracle import OracleState, Trajectory, oracle_exact_gd, oracle_run
from bdfl.learning.quasi_newton import (
    CurvatureState,
    advance,
    bdfl_update,
    bfgs_update,
    dfp_update,
    lr_at,
    step,
    update_curvature,
    weights_converged,
)
from bdfl.learning.taylor import (
    compute_d,
    compute_gradient_slice,
    compute_u,
    exact_loss,
    exact_residual,
    predict,
    select_batch,
    taylor_loss,
)

__all__ = [
    "CurvatureState",
    "OracleState",
    "Trajectory",
    "advance",
    "bdfl_update",
    "bfgs_update",
    "compute_d",
    "compute_gradient_slice",
    "compute_u",
    "dfp_update",
    "exact_loss",
    "exact_residual",
    "holdout_accuracy",
    "lr_at",
    "oracle_exact_gd",
    "oracle_run",
    "predict",
    "select_batch",
    "step",
    "taylor_loss",
    "train_exact_loss",
    "update_curvature",
    "weights_converged",
]
