"""U-statistic I_n, its variance estimate v_n^2 and the standardized statistic T_n.

    I_n   = (n(n-1)h)^{-1} sum_{i != j} <U_i, U_j> K_ij phi_ij
    v_n^2 = 2 (n^2(n-1)^2 h^2)^{-1} sum_{i != j} <U_i, U_j>^2 K_ij^2 phi_ij^2
    T_n   = I_n / v_n

with K_ij = K((Z_i - Z_j)/h) and phi_ij = exp(-||W_i - W_j||^2 / 2). The test
rejects for large positive T_n.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from core.errors import DegenerateStatisticError, DimensionError, DomainError
from core.geometry import project
from core.kernels import SMOOTHING_KERNEL, TESTING_KERNEL, KernelSpec, kernel_matrix, phi_matrix
from core.models import Dataset, IndexFrame, StatisticOutput
from core.smoothers import (
    compute_ranks,
    law_gram,
    residual_field_law,
    residual_field_law_fixed,
    residual_field_mean,
)

logger = logging.getLogger(__name__)


def pair_weights(Z, W, h: float, kernel: KernelSpec = TESTING_KERNEL) -> np.ndarray:
    """K_ij phi_ij for i != j, zero on the diagonal. Shared by I_n and v_n."""
    if not (np.isfinite(h) and h > 0):
        raise DomainError(f"Bandwidth h must be positive and finite, got {h!r}")
    Z = np.asarray(Z, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != Z.shape[0]:
        raise DimensionError(f"Z has {Z.shape[0]} rows but W has {W.shape[0]}")
    weights = kernel_matrix(kernel, Z, h) * phi_matrix(W)
    np.fill_diagonal(weights, 0.0)
    return weights


def assemble(inner: np.ndarray, weights: np.ndarray, h: float) -> StatisticOutput:
    """Combine pairwise inner products with precomputed off-diagonal weights."""
    inner = np.asarray(inner, dtype=float)
    n = inner.shape[0]
    if inner.shape != (n, n) or weights.shape != (n, n):
        raise DimensionError(f"inner {inner.shape} and weights {weights.shape} must be n x n")
    if n < 2:
        raise DimensionError("At least two observations are required")
    terms = inner * weights
    i_n = float(np.sum(terms)) / (n * (n - 1) * h)
    v_sq = 2.0 * float(np.sum(terms * terms)) / (n * n * (n - 1) ** 2 * h * h)
    v_n = math.sqrt(v_sq)
    if v_n == 0.0:
        raise DegenerateStatisticError(i_n)
    return StatisticOutput(i_n=i_n, v_n=v_n, t_n=i_n / v_n, n=n, h=float(h))


def quadratic_form(inner, Z, W, h: float, kernel: KernelSpec = TESTING_KERNEL) -> StatisticOutput:
    """I_n, v_n and T_n from a symmetric matrix of residual inner products.

    The diagonal of ``inner`` is ignored.
    """
    return assemble(inner, pair_weights(Z, W, h, kernel), h)


def mean_inner(dataset: Dataset, frame: IndexFrame, g: float,
               smoothing: KernelSpec = SMOOTHING_KERNEL) -> np.ndarray:
    """Rank-one inner products V_i V_j of the mean-test residual field."""
    Z, _ = project(dataset.X, frame)
    values = residual_field_mean(dataset.y, Z, g, smoothing).values
    return np.outer(values, values)


def law_inner(dataset: Dataset, frame: IndexFrame, g: float,
              smoothing: KernelSpec = SMOOTHING_KERNEL, fixed_cdf: bool = False) -> np.ndarray:
    """L2 Gram matrix of the law-test residual processes.

    Phi is the empirical CDF, or the standard normal CDF when ``fixed_cdf``.
    """
    Z, _ = project(dataset.X, frame)
    if fixed_cdf:
        field = residual_field_law_fixed(dataset.y, Z, g, smoothing)
    else:
        field = residual_field_law(compute_ranks(dataset.y), Z, g, smoothing)
    return law_gram(field)


def statistic_mean(
    dataset: Dataset,
    frame: IndexFrame,
    g: float,
    h: float,
    smoothing: KernelSpec = SMOOTHING_KERNEL,
    testing: KernelSpec = TESTING_KERNEL,
) -> StatisticOutput:
    """T_n for E[Y|X] = E[Y|X'beta]. Only the index X'beta is smoothed."""
    Z, W = project(dataset.X, frame)
    values = residual_field_mean(dataset.y, Z, g, smoothing).values
    return quadratic_form(np.outer(values, values), Z, W, h, testing)


def statistic_law(
    dataset: Dataset,
    frame: IndexFrame,
    g: float,
    h: float,
    smoothing: KernelSpec = SMOOTHING_KERNEL,
    testing: KernelSpec = TESTING_KERNEL,
    inner: Optional[np.ndarray] = None,
) -> StatisticOutput:
    """T_n for Y independent of X given X'beta, with Phi the empirical CDF.

    ``inner`` lets callers pass a Gram matrix built another way (fixed Phi).
    """
    Z, W = project(dataset.X, frame)
    if inner is None:
        field = residual_field_law(compute_ranks(dataset.y), Z, g, smoothing)
        inner = law_gram(field)
    return quadratic_form(inner, Z, W, h, testing)


def full_quadratic_psd_check(inner, Z, W, h: float, kernel: KernelSpec = TESTING_KERNEL) -> float:
    """sum_{i,j} <U_i, U_j> K_ij phi_ij over all pairs, diagonal included.

    Non-negative whenever ``inner`` is a Gram matrix, since K and phi are
    positive-definite kernels. A sanity diagnostic, not part of the decision.
    """
    Z = np.asarray(Z, dtype=float)
    weights = kernel_matrix(kernel, Z, h) * phi_matrix(W)
    return float(np.sum(np.asarray(inner, dtype=float) * weights))
