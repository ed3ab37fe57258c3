"""Training-side data models: optimizer choice, step schedule, per-round metrics."""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field


class OptimizerKind(str, Enum):
    """Parameter update rule. BDFL blends DFP and BFGS with weight alpha."""

    GD = "gd"
    DFP = "dfp"
    BFGS = "bfgs"
    BDFL = "bdfl"


class StepSchedule(BaseModel):
    """Inverse-time learning-rate decay: lr_k = lr0 / (1 + decay * k)."""

    model_config = {"frozen": True}

    lr0: float = Field(default=0.1, gt=0, allow_inf_nan=False)
    decay: float = Field(default=0.0, ge=0, allow_inf_nan=False)


# Column order of metrics.csv; wall time stays out so files are byte-stable.
METRICS_COLUMNS = [
    "round",
    "taylor_loss",
    "exact_loss",
    "test_accuracy",
    "lr",
    "curvature_skipped_A",
    "curvature_skipped_B",
    "msg_bytes",
]


class MetricsRecord(BaseModel):
    """One completed training round.

    Both losses are measured at the weights the round starts from; test
    accuracy is measured after the round's update.
    """

    round: int = Field(ge=1)
    taylor_loss: float
    exact_loss: float
    test_accuracy: Optional[float] = None
    lr: float
    curvature_skipped_a: bool = False
    curvature_skipped_b: bool = False
    msg_bytes: int = 0
    wall_ms: float = 0.0

    def csv_row(self) -> list[str]:
        """Render the row in METRICS_COLUMNS order with repr-exact floats."""
        return [
            str(self.round),
            repr(self.taylor_loss),
            repr(self.exact_loss),
            "" if self.test_accuracy is None else repr(self.test_accuracy),
            repr(self.lr),
            str(int(self.curvature_skipped_a)),
            str(int(self.curvature_skipped_b)),
            str(self.msg_bytes),
        ]


class RunSummary(BaseModel):
    """Contents of summary.json written after every run."""

    mode: str
    optimizer: OptimizerKind
    alpha: Optional[float] = None
    rounds_executed: int
    converged: bool
    final_taylor_loss: Optional[float] = None
    final_exact_loss: Optional[float] = None
    test_accuracy: Optional[float] = None
    total_msg_bytes: int = 0
    weights_a: list[float] = []
    weights_b: list[float] = []
