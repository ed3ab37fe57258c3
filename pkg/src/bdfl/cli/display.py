"""Progress display and results formatting with Rich."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.panel import Panel
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)
from rich.table import Table

from bdfl import __version__
from bdfl.config.settings import RunConfig
from bdfl.models.dataset import VerticalDataset
from bdfl.models.training import OptimizerKind, RunSummary


class DisplayManager:
    """Handles all terminal output formatting for the BDFL engine."""

    # Optimizer color coding in comparison and summary tables.
    OPTIMIZER_COLORS = {
        OptimizerKind.GD: "yellow",
        OptimizerKind.DFP: "cyan",
        OptimizerKind.BFGS: "green",
        OptimizerKind.BDFL: "magenta",
    }

    def __init__(self, console: Console = None):
        self.console = console or Console(stderr=True)
        self.term_width = self.console.width

    def _table_width(self) -> Optional[int]:
        return max(self.term_width - 4, 30) if self.term_width < 40 else None

    def show_header(self) -> None:
        panel_width = min(max(self.term_width - 4, 40), 60)
        self.console.print(
            Panel(
                f"[bold]BDFL Engine[/bold]  v{__version__}\n"
                "Vertical federated logistic regression",
                border_style="blue",
                width=panel_width,
            )
        )

    def show_config(self, cfg: RunConfig, data: VerticalDataset) -> None:
        """Display the run configuration and dataset shape."""
        table = Table(
            title="Run Configuration",
            show_header=False,
            border_style="dim",
            width=self._table_width(),
        )
        table.add_column("Property", style="bold")
        table.add_column("Value")

        color = self.OPTIMIZER_COLORS[cfg.optimizer.kind]
        table.add_row("Dataset", cfg.dataset.name)
        table.add_row("Train / Test rows", f"{data.n_train} / {data.n_test}")
        table.add_row("Columns A / B", f"{data.n_features_a} / {data.n_features_b}")
        table.add_row("Optimizer", f"[{color}]{cfg.label()}[/{color}]")
        table.add_row("Mode", cfg.run.mode.value)
        table.add_row("Rounds", str(cfg.training.rounds))
        table.add_row("Learning rate", f"{cfg.training.lr0:g} / (1 + {cfg.training.decay:g} k)")
        table.add_row("Tolerance", f"{cfg.training.tol:g}")
        if cfg.run.mode.value.startswith("federated"):
            table.add_row("Key size", f"{cfg.crypto.key_bits} bits")
            table.add_row("Scale", f"2^-{cfg.crypto.scale_bits}")
        table.add_row("Seed", str(cfg.run.seed))
        self.console.print(table)

    def create_progress(self) -> Progress:
        """Create a per-round progress bar.

        Usage:
            progress = display.create_progress()
            with progress:
                task = progress.add_task("Training", total=rounds)
                ...
                progress.update(task, advance=1)
        """
        bar_width = max(min(self.term_width - 60, 40), 20)
        return Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(bar_width=bar_width),
            MofNCompleteColumn(),
            TextColumn("loss {task.fields[loss]}"),
            TimeElapsedColumn(),
            TimeRemainingColumn(),
            console=self.console,
        )

    def show_run_summary(self, summary: RunSummary, paths: dict[str, Path]) -> None:
        table = Table(
            title="Run Summary",
            show_header=False,
            border_style="green",
            width=self._table_width(),
        )
        table.add_column("Property", style="bold")
        table.add_column("Value")

        table.add_row("Rounds executed", str(summary.rounds_executed))
        table.add_row("Converged", "yes" if summary.converged else "no")
        if summary.final_taylor_loss is not None:
            table.add_row("Final Taylor loss", f"{summary.final_taylor_loss:.6f}")
            table.add_row("Final exact loss", f"{summary.final_exact_loss:.6f}")
        if summary.test_accuracy is not None:
            table.add_row("Test accuracy", f"{summary.test_accuracy * 100:.2f}%")
        if summary.total_msg_bytes:
            table.add_row("Bytes exchanged", f"{summary.total_msg_bytes:,}")
        for name, path in paths.items():
            table.add_row(name.capitalize(), str(path))

        self.console.print(table)
        self.console.print("[green bold]Done.[/green bold]")

    def show_comparison(self, summary: dict, out_dir: Path) -> None:
        table = Table(
            title=f"Comparison (Taylor loss threshold {summary['threshold']:g})",
            border_style="cyan",
            width=self._table_width(),
        )
        table.add_column("Run", style="bold")
        table.add_column("Rounds", justify="right")
        table.add_column("Rounds to threshold", justify="right")
        table.add_column("Final loss", justify="right")
        table.add_column("Test accuracy", justify="right")

        for run in summary["runs"]:
            reached = run["rounds_to_threshold"]
            acc = run["test_accuracy"]
            loss = run["final_taylor_loss"]
            table.add_row(
                run["label"],
                str(run["rounds_executed"]),
                "[dim]not reached[/dim]" if reached is None else str(reached),
                "--" if loss is None else f"{loss:.6f}",
                "--" if acc is None else f"{acc * 100:.2f}%",
            )

        self.console.print(table)
        self.console.print(f"[dim]Written to {out_dir}[/dim]")

    def show_table1(self, cells, out_dir: Path) -> None:
        """Accuracy grid: reported value, measured value and delta per cell."""
        from bdfl.cli.experiments import METHOD_LABELS, TABLE1_DATASETS, TABLE1_METHODS

        by_key = {(c.method, c.dataset): c for c in cells}
        table = Table(title="Test Accuracy", border_style="magenta", width=self._table_width())
        table.add_column("Method", style="bold")
        for dataset in TABLE1_DATASETS:
            table.add_column(f"{dataset}\nreported", justify="right")
            table.add_column("measured", justify="right")
            table.add_column("delta", justify="right")

        for method in TABLE1_METHODS:
            row = [METHOD_LABELS[method]]
            for dataset in TABLE1_DATASETS:
                c = by_key[(method, dataset)]
                row.append("--" if c.reported is None else f"{c.reported * 100:.2f}%")
                row.append("--" if c.measured is None else f"{c.measured * 100:.2f}%")
                if c.delta is None:
                    row.append("--")
                else:
                    color = "green" if c.delta >= 0 else "red"
                    row.append(f"[{color}]{c.delta * 100:+.2f}[/{color}]")
            table.add_row(*row)

        self.console.print(table)
        self.console.print(f"[dim]Written to {out_dir}[/dim]")

    def show_party_summary(self, outcome: dict, paths: dict[str, Path]) -> None:
        table = Table(
            title=f"Party {outcome['role']}",
            show_header=False,
            border_style="green",
            width=self._table_width(),
        )
        table.add_column("Property", style="bold")
        table.add_column("Value")

        table.add_row("Rounds executed", str(outcome["rounds_executed"]))
        table.add_row("Halt reason", outcome["halt_reason"])
        table.add_row("Messages sent", f"{outcome['messages_sent']} ({outcome['bytes_sent']:,} bytes)")
        if outcome["taylor_losses"]:
            table.add_row("Final Taylor loss", f"{outcome['taylor_losses'][-1]:.6f}")
        for name, path in paths.items():
            table.add_row(name.capitalize(), str(path))

        self.console.print(table)

    def show_keygen(self, key_bits: int, paths: dict[str, Path]) -> None:
        self.console.print(f"[green bold]Generated {key_bits}-bit key pair.[/green bold]")
        for name, path in paths.items():
            self.console.print(f"  {name}: {path}")

    def show_error(self, message: str) -> None:
        self.console.print(f"[red bold]Error:[/red bold] {message}")
