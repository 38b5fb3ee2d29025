"""
Core data models for single-index assumption checking.

These dataclasses define the shared vocabulary used across all modules:
- Dataset: response vector and covariate matrix
- Direction / IndexFrame: a unit index direction and its orthonormal complement
- ResidualFieldMean / ResidualFieldLaw: leave-one-out smoothed residual quantities
- StatisticOutput: I_n, v_n and T_n for one bandwidth
- FitResult: an index estimate with its data-driven bandwidth
- BootstrapResult: wild-bootstrap replicate statistics and the derived decision inputs
- TestReport: everything a test run reports
- Diagnostics: counters for numerical floors and fallbacks
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import norm

from core.errors import DimensionError, DomainError

UNIT_NORM_TOL = 1e-10


class Hypothesis(str, Enum):
    MEAN = "mean"
    LAW = "law"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response vector y (n,) and covariate matrix X (n, p)."""
    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionError(
                f"Expected y of shape (n,) and X of shape (n, p); got {y.shape} and {X.shape}"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_response(self, y: np.ndarray) -> Dataset:
        return Dataset(y=y, X=self.X)

    def take(self, order: np.ndarray) -> Dataset:
        """Rows reordered (or subset) by an index array."""
        return Dataset(y=self.y[order], X=self.X[order])


@dataclass(frozen=True, eq=False)
class Direction:
    """Unit index direction with a strictly positive first component."""
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size < 1:
            raise DimensionError(f"Direction must be a 1-d vector, got shape {beta.shape}")
        if abs(float(np.linalg.norm(beta)) - 1.0) > UNIT_NORM_TOL or not beta[0] > 0:
            raise DomainError(
                "Direction must have unit norm and a positive first component; "
                "use geometry.normalize_direction to build one"
            )
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True, eq=False)
class IndexFrame:
    """A direction beta plus its orthonormal complement A(beta), shape (p, p-1)."""
    direction: Direction
    complement: np.ndarray
    fallback_used: bool = False

    def __post_init__(self):
        complement = np.asarray(self.complement, dtype=float)
        p = self.direction.p
        if complement.shape != (p, p - 1):
            raise DimensionError(
                f"Complement must have shape ({p}, {p - 1}), got {complement.shape}"
            )
        complement.setflags(write=False)
        object.__setattr__(self, "complement", complement)

    @property
    def beta(self) -> np.ndarray:
        return self.direction.beta

    @property
    def basis(self) -> np.ndarray:
        """The p x p matrix (beta | A(beta))."""
        return np.column_stack([self.direction.beta, self.complement])


@dataclass(frozen=True, eq=False)
class ResidualFieldMean:
    """Leave-one-out smoothed residuals V_i for the mean test."""
    values: np.ndarray
    bandwidth_g: float


@dataclass(frozen=True, eq=False)
class ResidualFieldLaw:
    """Step-function residual processes U_i(t) for the law test.

    Row i, column m holds U_i(t) on the m-th grid cell. With the empirical
    CDF the grid is the rank grid (cells == n); with a fixed CDF it is a
    uniform grid of ``cells`` cells on (0, 1].
    """
    step_values: np.ndarray
    ranks: Optional[np.ndarray]
    bandwidth_g: float

    @property
    def cells(self) -> int:
        return self.step_values.shape[1]


@dataclass(frozen=True)
class StatisticOutput:
    """I_n, its standard error v_n and T_n = I_n / v_n at bandwidth h."""
    i_n: float
    v_n: float
    t_n: float
    n: int
    h: float

    @property
    def p_value(self) -> float:
        """One-sided asymptotic p-value 1 - Phi(T_n)."""
        return float(norm.sf(self.t_n))


@dataclass(frozen=True, eq=False)
class FitResult:
    """An index estimate: raw minimizer beta~, its direction and g = 1/||beta~||."""
    direction: Direction
    raw: np.ndarray
    raw_norm: float
    bandwidth_g: float
    objective: float
    optimizer_evals: int
    converged: bool
    estimator: str
    gy: Optional[float] = None
    scales: Optional[np.ndarray] = None
    start_objectives: Tuple[float, ...] = ()
    floors_hit: int = 0

    def direction_original_scale(self) -> np.ndarray:
        """beta-hat mapped from standardized to original covariate units."""
        if self.scales is None:
            return self.direction.beta.copy()
        back = self.direction.beta / self.scales
        back = back / np.linalg.norm(back)
        return back if back[0] > 0 else -back


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    """Bootstrap replicate statistics and the critical value / p-value they imply."""
    replicate_stats: np.ndarray
    t_observed: float
    critical_value: float
    p_value: float
    B: int
    alpha: float
    seed: int
    h: float
    failures: int = 0
    optimizer_calls: int = 0

    @property
    def failure_share(self) -> float:
        return self.failures / self.B if self.B else 0.0

    @property
    def reject(self) -> bool:
        return self.t_observed > self.critical_value


@dataclass
class Diagnostics:
    """Counters for numerical guards (denominator floors, fallbacks, failures).

    Not shared across threads: each worker owns one and results are merged.
    """
    counts: Dict[str, int] = field(default_factory=dict)

    def record(self, key: str, count: int = 1) -> None:
        if count:
            self.counts[key] = self.counts.get(key, 0) + int(count)

    def get(self, key: str) -> int:
        return self.counts.get(key, 0)

    def merge(self, other: Diagnostics) -> None:
        for key, value in other.counts.items():
            self.record(key, value)


@dataclass
class TestReport:
    """Result of a full mean or law test run."""
    kind: Hypothesis
    n: int
    p: int
    h: float
    c: float
    h_override: bool
    statistic: StatisticOutput
    fit: FitResult
    bootstrap: BootstrapResult
    seed: int
    psd_diagnostic: float
    warnings: List[str] = field(default_factory=list)

    __test__ = False

    @property
    def reject_asymptotic(self) -> bool:
        return self.statistic.p_value < self.bootstrap.alpha

    @property
    def reject_bootstrap(self) -> bool:
        return self.bootstrap.reject

    def to_dict(self) -> Dict[str, object]:
        """Flat, ordered mapping; the schema is identical for every successful run."""
        fit = self.fit
        return {
            "test": self.kind.value,
            "n": self.n,
            "p": self.p,
            "i_n": self.statistic.i_n,
            "v_n": self.statistic.v_n,
            "t_n": self.statistic.t_n,
            "p_value_asymptotic": self.statistic.p_value,
            "p_value_bootstrap": self.bootstrap.p_value,
            "critical_value": self.bootstrap.critical_value,
            "reject_asymptotic": self.reject_asymptotic,
            "reject_bootstrap": self.reject_bootstrap,
            "alpha": self.bootstrap.alpha,
            "B": self.bootstrap.B,
            "bootstrap_failures": self.bootstrap.failures,
            "h": self.h,
            "c": self.c,
            "h_override": self.h_override,
            "g": fit.bandwidth_g,
            "gy": fit.gy if fit.gy is not None else math.nan,
            "beta_hat": " ".join(_fmt(b) for b in fit.direction.beta),
            "beta_hat_original": " ".join(_fmt(b) for b in fit.direction_original_scale()),
            "objective": fit.objective,
            "optimizer_evals": fit.optimizer_evals,
            "converged": fit.converged,
            "psd_diagnostic": self.psd_diagnostic,
            "seed": self.seed,
            "warnings": len(self.warnings),
        }


def _fmt(value: float) -> str:
    return format(float(value), ".17g")
