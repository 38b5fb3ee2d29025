"""Shared test fixtures."""

from pathlib import Path

import numpy as np
import pytest

from core.manifest import OptimizerConfig
from core.models import Dataset


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run long Monte Carlo reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def small_dataset(rng) -> Dataset:
    """n = 12, p = 3, single-index mean plus noise."""
    X = rng.standard_normal((12, 3))
    y = np.sin(X @ np.array([1.0, 0.5, -0.5])) + 0.3 * rng.standard_normal(12)
    return Dataset(y=y, X=X)


@pytest.fixture
def null_dataset(rng) -> Dataset:
    """n = 60, p = 2 draw from Y = X'b + 4 exp(-(X'b)^2) + 0.3 eps."""
    X = rng.standard_normal((60, 2))
    index = X @ np.array([1.0, 1.0])
    y = index + 4.0 * np.exp(-index ** 2) + 0.3 * rng.standard_normal(60)
    return Dataset(y=y, X=X)


@pytest.fixture
def quick_optimizer() -> OptimizerConfig:
    """Few starts and a low evaluation cap so fits stay fast."""
    return OptimizerConfig(max_evals=300, starts=2, bootstrap_starts=1, tolerance=1e-6)


@pytest.fixture
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def csv_writer():
    """Write (y, X) as a dataset file; an explicit header may be passed."""
    return _write_csv


def _write_csv(path: Path, y, X, header=None) -> Path:
    p = X.shape[1]
    header = header or ["y"] + [f"x{j}" for j in range(1, p + 1)]
    lines = [",".join(header)]
    for yi, row in zip(y, X):
        lines.append(",".join(repr(float(v)) for v in [yi, *row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
