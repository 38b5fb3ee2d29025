"""CSV dataset ingestion: header ``y,x1,...,xp``, one numeric row per observation."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import DataFileError
from core.models import Dataset

logger = logging.getLogger(__name__)


def expected_header(p: int) -> list[str]:
    return ["y"] + [f"x{j}" for j in range(1, p + 1)]


def load_dataset(path: str | Path) -> Dataset:
    """Parse a dataset file. Rows are numbered from 1 at the first data line."""
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"Data file not found: {path}")

    try:
        # strings first so every bad cell can be reported by position
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFileError(f"Could not read {path}: {e}")

    header = [str(c).strip() for c in frame.columns]
    p = len(header) - 1
    if p < 2:
        raise DataFileError(f"Need a response and at least two covariates, header was {header}")
    if header != expected_header(p):
        raise DataFileError(
            f"Header must be {','.join(expected_header(p))} in this order, got {','.join(header)}"
        )

    values = np.empty(frame.shape, dtype=float)
    for j, column in enumerate(header):
        raw = frame.iloc[:, j].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            i = int(bad[0])
            raise DataFileError(f"not a finite number: {raw.iloc[i]!r}", row=i + 1, column=column)
        values[:, j] = parsed

    if values.shape[0] < 2:
        raise DataFileError(f"Need at least 2 observations, got {values.shape[0]}")
    logger.info("Loaded %s: n=%d, p=%d", path, values.shape[0], p)
    return Dataset(y=values[:, 0], X=values[:, 1:])
