"""Leave-one-out smoothers.

- residual fields for the mean test (scalar per observation) and the law test
  (a step function per observation, indexed by the rank grid)
- the L2 Gram matrix of the law-test residual processes
- the leave-one-out Nadaraya-Watson regression used by estimation and bootstrap

All functions are pure; rows are computed with dense numpy broadcasting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm, rankdata

from core.errors import DimensionError, DomainError
from core.kernels import SMOOTHING_KERNEL, KernelSpec, kernel_matrix
from core.models import Diagnostics, ResidualFieldLaw, ResidualFieldMean

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-30
FIXED_CDF_CELLS = 512


@dataclass(frozen=True, eq=False)
class LeaveOneOutFit:
    """Leave-one-out Nadaraya-Watson fitted values.

    ``fallback`` flags observations whose kernel denominator fell below the
    floor and were replaced by the leave-one-out mean of y.
    """
    values: np.ndarray
    fallback: np.ndarray

    @property
    def fallback_count(self) -> int:
        return int(np.count_nonzero(self.fallback))


def _check_bandwidth(g: float) -> None:
    if not (np.isfinite(g) and g > 0):
        raise DomainError(f"Bandwidth must be positive and finite, got {g!r}")


def _as_vectors(y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.ndim != 1 or z.shape != y.shape:
        raise DimensionError(f"Length mismatch: y {y.shape} vs index {z.shape}")
    if y.shape[0] < 2:
        raise DimensionError("At least two observations are required")
    return y, z


def loo_weights(z: np.ndarray, g: float, kernel: KernelSpec = SMOOTHING_KERNEL) -> np.ndarray:
    """g^{-1} L((z_i - z_k)/g) with a zero diagonal."""
    weights = kernel_matrix(kernel, z, g) / g
    np.fill_diagonal(weights, 0.0)
    return weights


def compute_ranks(y) -> np.ndarray:
    """Ranks 1..n in ascending order; ties broken by input order."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] < 2:
        raise DimensionError("Ranks need a 1-d response with at least two entries")
    if not np.all(np.isfinite(y)):
        raise DomainError("Responses must be finite")
    return rankdata(y, method="ordinal").astype(np.int64)


def _check_ranks(ranks: np.ndarray) -> np.ndarray:
    ranks = np.asarray(ranks)
    n = ranks.shape[0]
    if ranks.ndim != 1 or not np.array_equal(np.sort(ranks), np.arange(1, n + 1)):
        raise DomainError("Ranks must be a permutation of 1..n")
    return ranks.astype(np.int64)


def residual_field_mean(y, z, g: float, kernel: KernelSpec = SMOOTHING_KERNEL) -> ResidualFieldMean:
    """V_i = (n-1)^{-1} sum_{k != i} (Y_i - Y_k) g^{-1} L((Z_i - Z_k)/g)."""
    _check_bandwidth(g)
    y, z = _as_vectors(y, z)
    n = y.shape[0]
    weights = loo_weights(z, g, kernel)
    diffs = y[:, None] - y[None, :]
    values = np.sum(diffs * weights, axis=1) / (n - 1)
    return ResidualFieldMean(values=values, bandwidth_g=float(g))


def residual_field_law(ranks, z, g: float, kernel: KernelSpec = SMOOTHING_KERNEL) -> ResidualFieldLaw:
    """Step functions U_i(t) on the rank grid, Phi = empirical CDF.

    Entry [i, m-1] = (n-1)^{-1} sum_{k != i} (1{R_i <= m} - 1{R_k <= m}) g^{-1} L_ik,
    computed as 1{R_i <= m} S_i - C_i(m) with C_i a prefix sum over k ordered by rank.
    """
    _check_bandwidth(g)
    ranks = _check_ranks(ranks)
    z = np.asarray(z, dtype=float)
    if z.shape != ranks.shape:
        raise DimensionError(f"Length mismatch: ranks {ranks.shape} vs index {z.shape}")
    n = ranks.shape[0]
    weights = loo_weights(z, g, kernel)
    order = np.argsort(ranks, kind="stable")
    prefix = np.cumsum(weights[:, order], axis=1)
    totals = prefix[:, -1:]
    grid = np.arange(1, n + 1)
    indicator = (ranks[:, None] <= grid[None, :]).astype(float)
    step_values = (indicator * totals - prefix) / (n - 1)
    # every indicator equals one at t = 1
    step_values[:, -1] = 0.0
    return ResidualFieldLaw(step_values=step_values, ranks=ranks, bandwidth_g=float(g))


def residual_field_law_fixed(
    y,
    z,
    g: float,
    kernel: KernelSpec = SMOOTHING_KERNEL,
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    cells: int = FIXED_CDF_CELLS,
) -> ResidualFieldLaw:
    """Law-test residual processes with a fixed, known Phi on a uniform grid.

    Phi defaults to the standard normal CDF of the standardized response.
    """
    _check_bandwidth(g)
    y, z = _as_vectors(y, z)
    n = y.shape[0]
    if cdf is None:
        spread = np.std(y)
        u = norm.cdf((y - np.mean(y)) / spread) if spread > 0 else np.full(n, 0.5)
    else:
        u = np.asarray(cdf(y), dtype=float)
    weights = loo_weights(z, g, kernel)
    grid = np.arange(1, cells + 1) / cells
    indicator = (u[:, None] <= grid[None, :]).astype(float)
    step_values = (indicator * weights.sum(axis=1, keepdims=True) - weights @ indicator) / (n - 1)
    return ResidualFieldLaw(step_values=step_values, ranks=None, bandwidth_g=float(g))


def law_gram(field: ResidualFieldLaw) -> np.ndarray:
    """G[i, j] = <U_i, U_j>_{L2}, exact for functions constant on the grid cells."""
    S = field.step_values
    gram = (S @ S.T) / field.cells
    # enforce exact symmetry of the floating-point product
    return 0.5 * (gram + gram.T)


def loo_nadaraya_watson(
    y,
    index_values,
    kernel: KernelSpec = SMOOTHING_KERNEL,
    diagnostics: Optional[Diagnostics] = None,
) -> LeaveOneOutFit:
    """m_i = sum_{k != i} Y_k L(idx_i - idx_k) / sum_{k != i} L(idx_i - idx_k).

    The bandwidth is absorbed in the scale of ``index_values``.
    """
    y, idx = _as_vectors(y, index_values)
    n = y.shape[0]
    weights = kernel_matrix(kernel, idx)
    np.fill_diagonal(weights, 0.0)
    denominator = weights.sum(axis=1)
    numerator = weights @ y
    fallback = denominator < DENOMINATOR_FLOOR
    values = np.empty(n)
    ok = ~fallback
    values[ok] = numerator[ok] / denominator[ok]
    if np.any(fallback):
        loo_mean = (y.sum() - y) / (n - 1)
        values[fallback] = loo_mean[fallback]
        if diagnostics is not None:
            diagnostics.record("nw_denominator_floor", int(fallback.sum()))
    return LeaveOneOutFit(values=values, fallback=fallback)
