"""Experiment orchestration behind the CLI commands.

Runs a configured mode, writes metrics.csv / transcript.jsonl / summary.json,
and builds the comparison and accuracy-table artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import pandas as pd

from bdfl.config.settings import RunConfig, RunMode, load_config
from bdfl.crypto.paillier import KeyPair
from bdfl.data.loader import build_dataset
from bdfl.federation.protocol import PartyOutcome
from bdfl.federation.protocol import run as federated_run
from bdfl.federation.transcript import Transcript
from bdfl.learning.oracle import RoundCallback, Trajectory, oracle_exact_gd, oracle_run
from bdfl.models.dataset import VerticalDataset
from bdfl.models.training import METRICS_COLUMNS, OptimizerKind, RunSummary

logger = logging.getLogger(__name__)

DEFAULT_LOSS_THRESHOLD = 0.5

# Reference test accuracy per (method, dataset); None where no reference run exists.
REFERENCE_ACCURACY: dict[tuple[str, str], Optional[float]] = {
    ("gd", "credit_card"): 0.9090,
    ("dfp", "credit_card"): 0.9441,
    ("bfgs", "credit_card"): 0.9510,
    ("bdfl", "credit_card"): None,
    ("gd", "breast_cancer"): 0.8626,
    ("dfp", "breast_cancer"): 0.8557,
    ("bfgs", "breast_cancer"): 0.9129,
    ("bdfl", "breast_cancer"): 0.9135,
}
TABLE1_METHODS = ["gd", "dfp", "bfgs", "bdfl"]
TABLE1_DATASETS = ["credit_card", "breast_cancer"]
METHOD_LABELS = {"gd": "SGD", "dfp": "DFP", "bfgs": "BFGS", "bdfl": "BDFL"}


@dataclass
class RunOutcome:
    config: RunConfig
    trajectory: Trajectory
    transcript: Optional[Transcript] = None

    @property
    def label(self) -> str:
        return self.config.label()

    def summary(self) -> RunSummary:
        records = self.trajectory.records
        last = records[-1] if records else None
        opt = self.config.optimizer
        return RunSummary(
            mode=self.config.run.mode.value,
            optimizer=opt.kind,
            alpha=opt.alpha if opt.kind is OptimizerKind.BDFL else None,
            rounds_executed=self.trajectory.rounds_executed,
            converged=self.trajectory.converged,
            final_taylor_loss=last.taylor_loss if last else None,
            final_exact_loss=last.exact_loss if last else None,
            test_accuracy=last.test_accuracy if last else None,
            total_msg_bytes=self.transcript.total_bytes if self.transcript else 0,
            weights_a=[float(v) for v in self.trajectory.final_w_a],
            weights_b=[float(v) for v in self.trajectory.final_w_b],
        )

    def rounds_to_threshold(self, threshold: float) -> Optional[int]:
        for record in self.trajectory.records:
            if record.taylor_loss <= threshold:
                return record.round
        return None


def execute(
    config: RunConfig,
    data: Optional[VerticalDataset] = None,
    keypair: Optional[KeyPair] = None,
    on_round: Optional[RoundCallback] = None,
) -> RunOutcome:
    """Run one configuration in its configured mode."""
    if data is None:
        data = build_dataset(config.dataset, config.run.seed)
    mode = config.run.mode
    if mode is RunMode.ORACLE:
        return RunOutcome(config, oracle_run(config, data, on_round))
    if mode is RunMode.ORACLE_EXACT:
        return RunOutcome(config, oracle_exact_gd(config, data, on_round))
    result = federated_run(config, data, keypair=keypair, on_round=on_round)
    return RunOutcome(config, result.trajectory, result.transcript)


def metrics_csv(trajectory: Trajectory) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    for record in trajectory.records:
        writer.writerow(record.csv_row())
    return buffer.getvalue()


def write_run_outputs(outcome: RunOutcome, out_dir: Path) -> dict[str, Path]:
    """Write metrics.csv, summary.json and (federated modes) transcript.jsonl."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"metrics": out / "metrics.csv", "summary": out / "summary.json"}
    paths["metrics"].write_text(metrics_csv(outcome.trajectory))
    paths["summary"].write_text(outcome.summary().model_dump_json(indent=2) + "\n")
    if outcome.transcript is not None:
        paths["transcript"] = outcome.transcript.save(out / "transcript.jsonl")
    logger.info("Wrote run outputs to %s", out)
    return paths


def write_party_outputs(outcome: PartyOutcome, out_dir: Path) -> dict[str, Path]:
    """Write party.json and the transcript of the messages this party sent."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"party": out / "party.json"}
    paths["party"].write_text(json.dumps(outcome.to_json(), indent=2) + "\n")
    paths["transcript"] = outcome.transcript.save(out / "transcript.jsonl")
    return paths


# ----------------------------------------------------------------------
# compare
# ----------------------------------------------------------------------


def unique_labels(configs: list[RunConfig]) -> list[str]:
    labels, seen = [], {}
    for cfg in configs:
        label = cfg.label()
        seen[label] = seen.get(label, 0) + 1
        labels.append(label if seen[label] == 1 else f"{label}#{seen[label]}")
    return labels


def comparison_table(outcomes: list[RunOutcome], labels: list[str]) -> pd.DataFrame:
    """Per-round loss and accuracy columns aligned on the round index.

    Runs that stopped early leave empty cells in later rounds.
    """
    frames = []
    for outcome, label in zip(outcomes, labels):
        rows = [
            {
                "round": r.round,
                f"{label}:taylor_loss": r.taylor_loss,
                f"{label}:exact_loss": r.exact_loss,
                f"{label}:test_accuracy": r.test_accuracy,
            }
            for r in outcome.trajectory.records
        ]
        frames.append(pd.DataFrame(rows).set_index("round"))
    table = pd.concat(frames, axis=1, join="outer").sort_index()
    table.index.name = "round"
    return table


def run_comparison(
    configs: list[RunConfig],
    out_dir: Path,
    threshold: float = DEFAULT_LOSS_THRESHOLD,
    on_outcome: Optional[Callable[[str, RunOutcome], None]] = None,
) -> tuple[list[RunOutcome], dict]:
    """Run every config on one shared dataset split and write comparison artifacts.

    A single config's comparison.csv is its metrics.csv.
    """
    if not configs:
        raise ValueError("compare needs at least one configuration")
    base = configs[0]
    data = build_dataset(base.dataset, base.run.seed)
    labels = unique_labels(configs)

    outcomes = []
    for cfg, label in zip(configs, labels):
        logger.info("Comparison run %s", label)
        outcome = execute(cfg, data)
        outcomes.append(outcome)
        if on_outcome is not None:
            on_outcome(label, outcome)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(outcomes) == 1:
        (out / "comparison.csv").write_text(metrics_csv(outcomes[0].trajectory))
    else:
        comparison_table(outcomes, labels).to_csv(out / "comparison.csv", lineterminator="\n")

    summary = {
        "threshold": threshold,
        "runs": [
            {
                "label": label,
                "rounds_executed": o.trajectory.rounds_executed,
                "rounds_to_threshold": o.rounds_to_threshold(threshold),
                "final_taylor_loss": o.summary().final_taylor_loss,
                "test_accuracy": o.summary().test_accuracy,
            }
            for o, label in zip(outcomes, labels)
        ],
    }
    (out / "comparison_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    logger.info("Wrote comparison of %d runs to %s", len(outcomes), out)
    return outcomes, summary


# ----------------------------------------------------------------------
# table1
# ----------------------------------------------------------------------


@dataclass
class AccuracyCell:
    method: str
    dataset: str
    reported: Optional[float]
    measured: Optional[float]

    @property
    def delta(self) -> Optional[float]:
        if self.reported is None or self.measured is None:
            return None
        return self.measured - self.reported


def table1_configs(config_dir: Path) -> dict[str, RunConfig]:
    configs = {}
    for dataset in TABLE1_DATASETS:
        path = Path(config_dir) / f"{dataset}.yaml"
        if not path.is_file():
            raise FileNotFoundError(f"missing dataset config: {path}")
        configs[dataset] = load_config(str(path))
    return configs


def run_table1(
    configs: dict[str, RunConfig],
    overrides: Callable[[RunConfig], RunConfig] = lambda c: c,
    on_cell: Optional[Callable[[AccuracyCell], None]] = None,
) -> list[AccuracyCell]:
    """Measure test accuracy for every cell that has a reported value."""
    cells = []
    for dataset in TABLE1_DATASETS:
        base = configs[dataset]
        data = build_dataset(base.dataset, base.run.seed)
        for method in TABLE1_METHODS:
            reported = REFERENCE_ACCURACY[(method, dataset)]
            measured = None
            if reported is not None:
                cfg = overrides(base.model_copy(deep=True))
                cfg.optimizer.kind = OptimizerKind(method)
                outcome = execute(cfg, data)
                measured = outcome.summary().test_accuracy
            cell = AccuracyCell(method, dataset, reported, measured)
            cells.append(cell)
            if on_cell is not None:
                on_cell(cell)
    return cells


def _percent(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "--"
    return f"{value * 100:.2f}%"


def _delta(value: Optional[float]) -> str:
    return "--" if value is None else f"{value * 100:+.2f}"


def table1_text(cells: list[AccuracyCell]) -> str:
    by_key = {(c.method, c.dataset): c for c in cells}
    header = f"{'Method':<8}" + "".join(
        f"{name + ' (reported/measured/delta)':>44}" for name in TABLE1_DATASETS
    )
    lines = [header, "-" * len(header)]
    for method in TABLE1_METHODS:
        row = f"{METHOD_LABELS[method]:<8}"
        for dataset in TABLE1_DATASETS:
            c = by_key[(method, dataset)]
            row += f"{_percent(c.reported) + ' / ' + _percent(c.measured) + ' / ' + _delta(c.delta):>44}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_table1(cells: list[AccuracyCell], out_dir: Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [
            {
                "method": METHOD_LABELS[c.method],
                "dataset": c.dataset,
                "reported": c.reported,
                "measured": c.measured,
                "delta": c.delta,
            }
            for c in cells
        ]
    )
    paths = {"csv": out / "table1.csv", "text": out / "table1.txt"}
    frame.to_csv(paths["csv"], index=False, lineterminator="\n")
    paths["text"].write_text(table1_text(cells))
    logger.info("Wrote accuracy table to %s", out)
    return paths
