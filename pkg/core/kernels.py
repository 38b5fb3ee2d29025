"""Univariate kernels K, L and the multivariate weight phi.

Kernels are evaluated unscaled. The 1/g and 1/h factors are applied by the
callers in ``core.smoothers`` and ``core.statistics``.

Every family must be symmetric, integrate to one in absolute value and have a
strictly positive Fourier transform. The Gaussian density satisfies all three.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from core.errors import DomainError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(str, Enum):
    GAUSSIAN_DENSITY = "gaussian_density"


class KernelPurpose(str, Enum):
    SMOOTHING = "smoothing"  # L
    TESTING = "testing"  # K


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = KernelFamily.GAUSSIAN_DENSITY
    purpose: KernelPurpose = KernelPurpose.SMOOTHING

    def __call__(self, u):
        return eval_kernel(self, u)


SMOOTHING_KERNEL = KernelSpec(KernelFamily.GAUSSIAN_DENSITY, KernelPurpose.SMOOTHING)
TESTING_KERNEL = KernelSpec(KernelFamily.GAUSSIAN_DENSITY, KernelPurpose.TESTING)


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{what} must be finite")


def eval_kernel(spec: KernelSpec, u):
    """Evaluate k(u); accepts a scalar (returns float) or an array (elementwise)."""
    arr = np.asarray(u, dtype=float)
    _check_finite(arr, "Kernel argument")
    if spec.family is KernelFamily.GAUSSIAN_DENSITY:
        out = _INV_SQRT_2PI * np.exp(-0.5 * arr * arr)
    else:  # pragma: no cover - the enum has a single member
        raise DomainError(f"Unsupported kernel family: {spec.family}")
    return float(out) if out.ndim == 0 else out


def eval_phi(w) -> float:
    """phi(w) = exp(-||w||^2 / 2), always in (0, 1]."""
    arr = np.asarray(w, dtype=float).ravel()
    _check_finite(arr, "phi argument")
    return float(np.exp(-0.5 * np.dot(arr, arr)))


def kernel_matrix(spec: KernelSpec, values: np.ndarray, bandwidth: float = 1.0) -> np.ndarray:
    """Pairwise k((v_i - v_j) / bandwidth), diagonal included, no 1/bandwidth factor."""
    v = np.asarray(values, dtype=float)
    return eval_kernel(spec, (v[:, None] - v[None, :]) / bandwidth)


def phi_matrix(W: np.ndarray) -> np.ndarray:
    """Pairwise phi(W_i - W_j); depends on W only through ||W_i - W_j||."""
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    _check_finite(W, "phi argument")
    if W.shape[1] == 0:
        return np.ones((W.shape[0], W.shape[0]))
    return np.exp(-0.5 * cdist(W, W, "sqeuclidean"))
