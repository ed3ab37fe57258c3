"""CLI entry point using Click."""

import json
import sys
from pathlib import Path
from typing import Any, Optional

import click
import yaml
from pydantic import ValidationError

from bdfl import __version__
from bdfl.config.settings import RunConfig, apply_fast_mode, load_config
from bdfl.utils.logging import run_log, setup_logging

# Library failures reported as a one-line error; anything else gets a traceback.
EXPECTED_ERRORS = (ValueError, OverflowError, ArithmeticError, FileNotFoundError, RuntimeError)


def _fail(message: str) -> None:
    from bdfl.cli.display import DisplayManager

    DisplayManager().show_error(message)
    sys.exit(1)


def _load(config_path: str) -> RunConfig:
    try:
        return load_config(config_path)
    except yaml.YAMLError as exc:
        _fail(f"Malformed YAML config file '{config_path}': {exc}")
    except ValidationError as exc:
        _fail(f"Invalid config values in '{config_path}': {exc}")
    except OSError as exc:
        _fail(f"Failed to load config '{config_path}': {exc}")


def _with_overrides(cfg: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Apply dotted-path overrides (flags win over the file) and re-validate."""
    data = cfg.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        block, field = dotted.split(".")
        data[block][field] = value
    try:
        return apply_fast_mode(RunConfig(**data))
    except ValidationError as exc:
        _fail(f"Invalid option values: {exc}")


def _dataset_overrides(dataset: Optional[str]) -> dict[str, Any]:
    if dataset is None:
        return {}
    return {"dataset.source": "csv", "dataset.path": dataset, "dataset.name": Path(dataset).stem}


_OPTIMIZERS = click.Choice(["gd", "dfp", "bfgs", "bdfl"], case_sensitive=False)
_MODES = click.Choice(["federated", "federated-sockets", "oracle", "oracle-exact"])


def run_options(func):
    """Options shared by commands that launch training runs."""
    options = [
        click.option("--config", "-c", default="config/default.yaml",
                     type=click.Path(resolve_path=True), help="Path to YAML configuration file."),
        click.option("--dataset", default=None, type=click.Path(dir_okay=False),
                     help="CSV file to train on (overrides the dataset block's path)."),
        click.option("--rounds", "-E", default=None, type=int, help="Maximum number of rounds."),
        click.option("--lr", default=None, type=float, help="Initial learning rate lr0."),
        click.option("--decay", default=None, type=float, help="Learning-rate decay per round."),
        click.option("--tol", default=None, type=float, help="Convergence tolerance on max |w_k - w_k-1|."),
        click.option("--seed", default=None, type=int, help="Seed for splits, keys and encryption."),
        click.option("--key-bits", default=None, type=int, help="Paillier modulus size."),
        click.option("--scale-bits", default=None, type=int, help="Fixed-point fractional bits."),
        click.option("--mode", default=None, type=_MODES, help="Execution mode."),
        click.option("--scheduler", default=None, type=click.Choice(["sequential", "threaded"]),
                     help="Party scheduling for the federated mode."),
        click.option("--batch-size", default=None, type=int, help="Mini-batch size (default: full batch)."),
        click.option("--out", "-o", default=None, type=click.Path(resolve_path=True),
                     help="Output directory (overrides config)."),
        click.option("--verbose", "-v", is_flag=True, help="Enable debug logging."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _run_overrides(params: dict[str, Any]) -> dict[str, Any]:
    overrides = {
        "training.rounds": params.get("rounds"),
        "training.lr0": params.get("lr"),
        "training.decay": params.get("decay"),
        "training.tol": params.get("tol"),
        "training.batch_size": params.get("batch_size"),
        "run.seed": params.get("seed"),
        "crypto.key_bits": params.get("key_bits"),
        "crypto.scale_bits": params.get("scale_bits"),
        "run.mode": params.get("mode"),
        "run.scheduler": params.get("scheduler"),
        "run.output_dir": params.get("out"),
    }
    overrides.update(_dataset_overrides(params.get("dataset")))
    return overrides


@click.group()
@click.version_option(version=__version__, prog_name="bdfl")
def main() -> None:
    """BDFL Engine -- vertical federated logistic regression with quasi-Newton updates."""


@main.command()
@run_options
@click.option("--optimizer", default=None, type=_OPTIMIZERS, help="Update rule.")
@click.option("--alpha", default=None, type=float, help="DFP weight in the BDFL blend.")
def train(**params) -> None:
    """Train one model and write metrics.csv, transcript.jsonl and summary.json."""
    logger = setup_logging(verbose=params["verbose"])
    cfg = _load(params["config"])
    overrides = _run_overrides(params)
    overrides["optimizer.kind"] = params["optimizer"]
    overrides["optimizer.alpha"] = params["alpha"]
    cfg = _with_overrides(cfg, overrides)

    out_dir = Path(cfg.run.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail(f"Failed to create output directory '{out_dir}': {exc}")

    logger.info("BDFL Engine v%s", __version__)
    logger.debug("Full config: %s", cfg.model_dump())

    from bdfl.cli.display import DisplayManager
    from bdfl.cli.experiments import execute, write_run_outputs
    from bdfl.data.loader import build_dataset

    display = DisplayManager()
    display.show_header()

    try:
        with run_log(out_dir, verbose=params["verbose"]) as log_path:
            data = build_dataset(cfg.dataset, cfg.run.seed)
            display.show_config(cfg, data)
            progress = display.create_progress()
            with progress:
                task = progress.add_task("Training", total=cfg.training.rounds, loss="-")
                outcome = execute(
                    cfg, data,
                    on_round=lambda k, loss: progress.update(task, completed=k, loss=f"{loss:.6f}"),
                )
            paths = write_run_outputs(outcome, out_dir)
        paths["log"] = log_path
        display.show_run_summary(outcome.summary(), paths)
    except EXPECTED_ERRORS as exc:
        logger.debug("Run failed", exc_info=True)
        display.show_error(str(exc))
        sys.exit(1)
    except Exception as exc:
        logger.exception("Run failed")
        display.show_error(f"Unexpected error: {exc}")
        sys.exit(1)


@main.command()
@click.argument("config_files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@run_options
@click.option("--optimizers", default=None,
              help="Comma-separated optimizers to run on the base config, e.g. 'gd,bfgs,bdfl'.")
@click.option("--alpha", default=None, type=float, help="DFP weight for BDFL runs.")
@click.option("--threshold", default=0.5, show_default=True, type=float,
              help="Taylor-loss level for the rounds-to-threshold statistic.")
def compare(config_files, **params) -> None:
    """Run several configurations on one split and write comparison.csv."""
    logger = setup_logging(verbose=params["verbose"])
    overrides = _run_overrides(params)
    overrides["optimizer.alpha"] = params["alpha"]

    configs = [_with_overrides(_load(path), overrides) for path in config_files]
    if params["optimizers"]:
        base = _with_overrides(_load(params["config"]), overrides)
        for name in [n.strip().lower() for n in params["optimizers"].split(",") if n.strip()]:
            if name not in ("gd", "dfp", "bfgs", "bdfl"):
                _fail(f"Unknown optimizer '{name}'")
            configs.append(_with_overrides(base, {"optimizer.kind": name}))
    if not configs:
        _fail("Nothing to compare: pass config files or --optimizers")

    from bdfl.cli.display import DisplayManager
    from bdfl.cli.experiments import run_comparison

    display = DisplayManager()
    display.show_header()
    out_dir = Path(configs[0].run.output_dir)
    try:
        _, summary = run_comparison(
            configs, out_dir, threshold=params["threshold"],
            on_outcome=lambda label, o: logger.info(
                "%s: %d rounds, final loss %.6f", label, o.trajectory.rounds_executed,
                o.trajectory.records[-1].taylor_loss,
            ),
        )
        display.show_comparison(summary, out_dir)
    except EXPECTED_ERRORS as exc:
        logger.debug("Comparison failed", exc_info=True)
        display.show_error(str(exc))
        sys.exit(1)
    except Exception as exc:
        logger.exception("Comparison failed")
        display.show_error(f"Unexpected error: {exc}")
        sys.exit(1)


@main.command()
@click.option("--config-dir", default="config", show_default=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory holding credit_card.yaml and breast_cancer.yaml.")
@click.option("--mode", default=None, type=_MODES, help="Execution mode for every cell.")
@click.option("--rounds", "-E", default=None, type=int, help="Override the round budget.")
@click.option("--seed", default=None, type=int, help="Override the seed.")
@click.option("--key-bits", default=None, type=int, help="Paillier modulus size.")
@click.option("--out", "-o", default="./output/table1", show_default=True,
              type=click.Path(resolve_path=True), help="Output directory.")
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging.")
def table1(config_dir, mode, rounds, seed, key_bits, out, verbose) -> None:
    """Measure test accuracy per optimizer and dataset beside the reported values."""
    logger = setup_logging(verbose=verbose)

    from bdfl.cli.display import DisplayManager
    from bdfl.cli.experiments import run_table1, table1_configs, write_table1

    display = DisplayManager()
    display.show_header()
    overrides = {
        "run.mode": mode, "training.rounds": rounds, "run.seed": seed, "crypto.key_bits": key_bits,
    }
    try:
        configs = {name: _with_overrides(cfg, overrides) for name, cfg in table1_configs(config_dir).items()}
        cells = run_table1(
            configs,
            overrides=lambda c: _with_overrides(c, {}),
            on_cell=lambda c: logger.info(
                "%s / %s: measured %s", c.method, c.dataset,
                "--" if c.measured is None else f"{c.measured:.4f}",
            ),
        )
        write_table1(cells, Path(out))
        display.show_table1(cells, Path(out))
    except (yaml.YAMLError, ValidationError) as exc:
        display.show_error(f"Invalid dataset config: {exc}")
        sys.exit(1)
    except EXPECTED_ERRORS as exc:
        logger.debug("Table run failed", exc_info=True)
        display.show_error(str(exc))
        sys.exit(1)
    except Exception as exc:
        logger.exception("Table run failed")
        display.show_error(f"Unexpected error: {exc}")
        sys.exit(1)


@main.command()
@click.option("--key-bits", default=2048, show_default=True, type=int, help="Paillier modulus size.")
@click.option("--seed", default=None, type=int, help="Deterministic key generation (testing only).")
@click.option("--out", "-o", default="./keys", show_default=True,
              type=click.Path(resolve_path=True), help="Output directory.")
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging.")
def keygen(key_bits, seed, out, verbose) -> None:
    """Generate a Paillier key pair as public_key.json and private_key.json."""
    setup_logging(verbose=verbose)

    from bdfl.cli.display import DisplayManager
    from bdfl.crypto.paillier import generate_keypair

    display = DisplayManager()
    try:
        keypair = generate_keypair(key_bits, seed=seed)
    except ValueError as exc:
        display.show_error(str(exc))
        sys.exit(1)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"public key": out_dir / "public_key.json", "private key": out_dir / "private_key.json"}
    paths["public key"].write_text(json.dumps(keypair.public_key.to_dict(), indent=2) + "\n")
    paths["private key"].write_text(json.dumps(keypair.to_dict(), indent=2) + "\n")
    display.show_keygen(key_bits, paths)


@main.command()
@click.option("--role", "-r", required=True, type=click.Choice(["A", "B", "C"], case_sensitive=False),
              help="Party to play: A (host), B (guest, holds labels) or C (arbiter, holds the key).")
@click.option("--config", "-c", default="config/default.yaml",
              type=click.Path(resolve_path=True), help="Path to YAML configuration file.")
@click.option("--dataset", default=None, type=click.Path(dir_okay=False),
              help="CSV file to train on (overrides the dataset block's path).")
@click.option("--rounds", "-E", default=None, type=int, help="Maximum number of rounds.")
@click.option("--seed", default=None, type=int, help="Seed shared by all three parties.")
@click.option("--key-bits", default=None, type=int, help="Paillier modulus size (C without --key-dir).")
@click.option("--key-dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Directory with private_key.json from `bdfl keygen` (C only).")
@click.option("--out", "-o", default=None, type=click.Path(resolve_path=True),
              help="Output directory (default: <run.output_dir>/party-<role>).")
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging.")
def party(role, config, dataset, rounds, seed, key_bits, key_dir, out, verbose) -> None:
    """Play one party over sockets, meeting the others at transport.peers."""
    logger = setup_logging(verbose=verbose)
    overrides = {
        "training.rounds": rounds, "run.seed": seed, "crypto.key_bits": key_bits,
        **_dataset_overrides(dataset),
    }
    cfg = _with_overrides(_load(config), overrides)

    from bdfl.cli.display import DisplayManager
    from bdfl.cli.experiments import write_party_outputs
    from bdfl.crypto.paillier import KeyPair
    from bdfl.data.loader import build_dataset
    from bdfl.federation.protocol import run_party
    from bdfl.models.protocol import PartyRole

    display = DisplayManager()
    role = PartyRole(role.upper())
    out_dir = Path(out) if out else Path(cfg.run.output_dir) / f"party-{role.value}"
    try:
        with run_log(out_dir, name=f"party-{role.value}.log", verbose=verbose) as log_path:
            data, keypair = None, None
            if role is PartyRole.ARBITER_C:
                if key_dir is not None:
                    keypair = KeyPair.from_dict(json.loads((Path(key_dir) / "private_key.json").read_text()))
            else:
                data = build_dataset(cfg.dataset, cfg.run.seed)
            outcome = run_party(cfg, role, data=data, keypair=keypair)
            paths = write_party_outputs(outcome, out_dir)
        paths["log"] = log_path
        display.show_party_summary(outcome.to_json(), paths)
    except EXPECTED_ERRORS + (KeyError,) as exc:
        logger.debug("Party %s failed", role.value, exc_info=True)
        display.show_error(str(exc))
        sys.exit(1)
    except Exception as exc:
        logger.exception("Party %s failed", role.value)
        display.show_error(f"Unexpected error: {exc}")
        sys.exit(1)
