"""Logging for the BDFL engine.

Library modules log under `bdfl.<module>`. Party machines log under
`bdfl.party.<role>` so interleaved threaded and multi-process runs stay
attributable per party. A run can mirror everything into a log file inside
its output directory.
"""

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

ROOT_LOGGER = "bdfl"
PARTY_LOGGER = f"{ROOT_LOGGER}.party"
RUN_LOG_NAME = "run.log"

_FORMATS = {
    False: "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s",
    True: "[%(asctime)s] [%(levelname)s] [%(name)s] [%(threadName)s:%(funcName)s] %(message)s",
}
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _formatter(verbose: bool) -> logging.Formatter:
    return logging.Formatter(_FORMATS[verbose], datefmt=_DATE_FORMAT)


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Configure the `bdfl` logger with a single stderr handler.

    Repeated calls reset level and format and rebind the handler to the
    current sys.stderr, which CliRunner swaps on every invocation.
    """
    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False

    console = next((h for h in logger.handlers if type(h) is logging.StreamHandler), None)
    if console is None:
        console = logging.StreamHandler(sys.stderr)
        logger.addHandler(console)
    else:
        # Plain assignment: setStream would flush a stream CliRunner already closed.
        console.stream = sys.stderr
    console.setFormatter(_formatter(verbose))
    return logger


def party_logger(role: str) -> logging.Logger:
    """Logger of one protocol party, e.g. `bdfl.party.C`."""
    return logging.getLogger(f"{PARTY_LOGGER}.{role}")


@contextmanager
def run_log(out_dir: Path, name: str = RUN_LOG_NAME, verbose: bool = False) -> Iterator[Path]:
    """Copy every `bdfl` record into out_dir/name while the block runs."""
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(_formatter(verbose))
    logger = logging.getLogger(ROOT_LOGGER)
    logger.addHandler(handler)
    try:
        yield path
    finally:
        logger.removeHandler(handler)
        handler.close()
