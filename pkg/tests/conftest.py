"""Shared test fixtures for the BDFL engine."""

import pytest

from bdfl.config.settings import (
    CryptoConfig,
    DatasetConfig,
    ExecutionConfig,
    OptimizerConfig,
    RunConfig,
    TrainingConfig,
)
from bdfl.crypto.paillier import generate_keypair
from bdfl.data.loader import synthetic_dataset
from bdfl.models.training import OptimizerKind

TEST_KEY_BITS = 512
TEST_SEED = 7


@pytest.fixture(scope="session")
def keypair():
    """Seeded 512-bit Paillier key pair, generated once per test session."""
    return generate_keypair(TEST_KEY_BITS, seed=1234)


@pytest.fixture(scope="session")
def public_key(keypair):
    return keypair.public_key


@pytest.fixture
def rng():
    from bdfl.crypto.rng import make_rng

    return make_rng(99, "tests")


@pytest.fixture
def small_dataset():
    """40 rows (30 train / 10 test), 3 columns at A and 2 at B."""
    return synthetic_dataset(40, 3, 2, seed=TEST_SEED, separation=3.0, test_fraction=0.25)


def make_config(
    kind: OptimizerKind = OptimizerKind.BDFL,
    rounds: int = 4,
    alpha: float = 0.5,
    output_dir: str = "./test_output",
    **run_overrides,
) -> RunConfig:
    """Fast run config on the small synthetic dataset."""
    return RunConfig(
        dataset=DatasetConfig(samples=40, features_a=3, features_b=2, test_fraction=0.25),
        optimizer=OptimizerConfig(kind=kind, alpha=alpha),
        training=TrainingConfig(rounds=rounds, lr0=0.2, decay=0.05, tol=1e-6),
        crypto=CryptoConfig(key_bits=TEST_KEY_BITS, scale_bits=40),
        run=ExecutionConfig(seed=TEST_SEED, output_dir=output_dir, **run_overrides),
    )


@pytest.fixture
def fast_config(tmp_path):
    """RunConfig with 512-bit keys, four rounds and a temporary output directory."""
    return make_config(output_dir=str(tmp_path / "output"))


@pytest.fixture
def toy_csv(tmp_path):
    """Eight rows, three numeric features, label in the last column."""
    path = tmp_path / "toy.csv"
    rows = [
        "f0,f1,f2,label",
        "1.0,2.0,0.5,1",
        "2.0,1.0,1.5,0",
        "3.0,4.0,2.5,1",
        "4.0,3.0,3.5,0",
        "5.0,6.0,4.5,1",
        "6.0,5.0,5.5,0",
        "7.0,8.0,6.5,1",
        "8.0,7.0,7.5,0",
    ]
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def output_dir(tmp_path):
    """Provide a temporary output directory."""
    out = tmp_path / "output"
    out.mkdir()
    return out


@pytest.fixture
def config_factory(tmp_path):
    """Build fast configs that write under tmp_path unless told otherwise."""

    def _factory(kind: OptimizerKind = OptimizerKind.BDFL, rounds: int = 4, **kwargs) -> RunConfig:
        kwargs.setdefault("output_dir", str(tmp_path / "output"))
        return make_config(kind, rounds, **kwargs)

    return _factory
