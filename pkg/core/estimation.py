"""Index estimation under the single-index null.

Mean test: semiparametric least squares, minimizing the sum of squared
leave-one-out Nadaraya-Watson residuals over raw directions beta~ on
standardized covariates. The norm of beta~ acts as an inverse bandwidth, so
the estimate yields both beta-hat = beta~/||beta~|| and g = 1/||beta~||.

Law test: rank pseudo-likelihood, maximized jointly over (beta~, g_Y), with
g_Y optimized on the log scale.

Both use scipy's Nelder-Mead from several starting points. The objectives are
sign-symmetric in beta, so candidates are flipped into the half-space
beta_1 > 0 instead of being penalized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from core.errors import DegenerateCovariateError, DimensionError, DomainError, EstimationError, IdentificationError
from core.geometry import normalize_direction
from core.kernels import SMOOTHING_KERNEL, KernelSpec, kernel_matrix
from core.manifest import OptimizerConfig
from core.models import Dataset, Diagnostics, FitResult
from core.smoothers import DENOMINATOR_FLOOR, compute_ranks, loo_nadaraya_watson
from core.streams import STREAM_OPTIMIZER, child_generator

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-30
FLOOR_KEYS = ("nw_denominator_floor", "density_floor")
KNOWN_ESTIMATOR = "known"


def standardize_covariates(X) -> Tuple[np.ndarray, np.ndarray]:
    """Divide each column by its root mean squared deviation (no centering)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"X must be 2-d, got shape {X.shape}")
    centered = X - X.mean(axis=0)
    scales = np.sqrt(np.mean(centered * centered, axis=0))
    magnitude = np.maximum(1.0, np.max(np.abs(X), axis=0))
    for j, (scale, size) in enumerate(zip(scales, magnitude)):
        if not np.isfinite(scale) or scale <= 1e-12 * size:
            raise DegenerateCovariateError(j + 1)
    return X / scales, scales


def bandwidth_in_regime(g: float, n: int) -> bool:
    """g within [0.1 n^{-1/4}, 10 n^{-1/5}], the admissible rate band with slack."""
    return 0.1 * n ** -0.25 <= g <= 10.0 * n ** -0.2


def _half_space(beta: np.ndarray) -> np.ndarray:
    return -beta if beta[0] < 0 else beta


def _sls_value(beta_raw, Xs, y, kernel, diagnostics=None) -> float:
    fit = loo_nadaraya_watson(y, Xs @ beta_raw, kernel, diagnostics)
    resid = y - fit.values
    return float(np.dot(resid, resid))


def sls_objective(beta_raw, Xs, y, kernel: KernelSpec = SMOOTHING_KERNEL,
                  diagnostics: Optional[Diagnostics] = None) -> float:
    """sum_i (Y_i - m_i(beta))^2 with L evaluated on raw index differences."""
    beta_raw = np.asarray(beta_raw, dtype=float)
    if not beta_raw[0] > 0:
        raise IdentificationError(beta_raw)
    return _sls_value(beta_raw, np.asarray(Xs, dtype=float), np.asarray(y, dtype=float),
                      kernel, diagnostics)


def _law_value(beta_raw, g_y, Xs, ranks, kernel, diagnostics=None) -> float:
    n = ranks.shape[0]
    index_weights = kernel_matrix(kernel, Xs @ beta_raw)
    np.fill_diagonal(index_weights, 0.0)
    rank_weights = kernel_matrix(kernel, ranks / n, g_y) / g_y
    numerator = np.sum(rank_weights * index_weights, axis=1)
    denominator = index_weights.sum(axis=1)
    density = np.zeros(n)
    ok = denominator >= DENOMINATOR_FLOOR
    density[ok] = numerator[ok] / denominator[ok]
    floored = ~(density >= DENSITY_FLOOR)
    if np.any(floored):
        density[floored] = DENSITY_FLOOR
        if diagnostics is not None:
            diagnostics.record("density_floor", int(floored.sum()))
    return float(-np.sum(np.log(density)))


def law_objective(beta_raw, g_y: float, Xs, ranks, kernel: KernelSpec = SMOOTHING_KERNEL,
                  diagnostics: Optional[Diagnostics] = None) -> float:
    """Negative log pseudo-likelihood of the leave-one-out conditional rank densities."""
    beta_raw = np.asarray(beta_raw, dtype=float)
    if not beta_raw[0] > 0:
        raise IdentificationError(beta_raw)
    if not (np.isfinite(g_y) and g_y > 0):
        raise DomainError(f"g_y must be positive, got {g_y!r}")
    return _law_value(beta_raw, float(g_y), np.asarray(Xs, dtype=float),
                      np.asarray(ranks, dtype=float), kernel, diagnostics)


@dataclass
class _StartOutcome:
    x: np.ndarray
    value: float
    initial_value: float
    evals: int
    converged: bool


def _run_start(objective: Callable[[np.ndarray], float], x0: np.ndarray,
               config: OptimizerConfig) -> _StartOutcome:
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxfev": config.max_evals,
            "maxiter": config.max_evals,
            "fatol": config.tolerance,
            # converge on objective spread alone
            "xatol": np.inf,
            "adaptive": False,
        },
    )
    return _StartOutcome(
        x=np.asarray(res.x, dtype=float),
        value=float(res.fun),
        initial_value=float(objective(x0)),
        evals=int(res.nfev),
        converged=bool(res.success),
    )


def _starting_directions(Xs: np.ndarray, y: np.ndarray, n_starts: int,
                         config: OptimizerConfig, rng: np.random.Generator,
                         warm_start: Optional[np.ndarray]) -> List[np.ndarray]:
    """OLS direction (or the warm start) first, then random unit vectors."""
    n, p = Xs.shape
    starts: List[np.ndarray] = []
    if warm_start is not None:
        starts.append(_half_space(np.asarray(warm_start, dtype=float)))
    else:
        design = np.column_stack([np.ones(n), Xs])
        coef = np.linalg.lstsq(design, y, rcond=None)[0][1:]
        norm = np.linalg.norm(coef)
        if np.isfinite(norm) and norm > 0 and coef[0] != 0:
            starts.append(_half_space(coef / norm) * n ** 0.2)
    k = 0
    while len(starts) < n_starts:
        u = rng.standard_normal(p)
        u = _half_space(u / np.linalg.norm(u))
        starts.append(u * config.start_norms[k % len(config.start_norms)])
        k += 1
    return starts[:n_starts]


def _best_of(outcomes: Sequence[_StartOutcome], estimator: str) -> _StartOutcome:
    usable = [o for o in outcomes
              if np.isfinite(o.value) and np.all(np.isfinite(o.x)) and o.x[0] != 0]
    if not usable:
        raise EstimationError(
            estimator,
            [f"start {i}: value={o.value!r}, x={o.x.tolist()}" for i, o in enumerate(outcomes)],
        )
    return min(usable, key=lambda o: o.value)


def _finish(best: _StartOutcome, outcomes: Sequence[_StartOutcome], p: int, n: int,
            scales: np.ndarray, estimator: str, diagnostics: Diagnostics,
            floors: Diagnostics) -> FitResult:
    raw = _half_space(best.x[:p].copy())
    raw_norm = float(np.linalg.norm(raw))
    if not (np.isfinite(raw_norm) and raw_norm > 0):
        raise EstimationError(estimator, [f"degenerate minimizer {raw.tolist()}"])
    g = 1.0 / raw_norm
    gy = float(math.exp(best.x[p])) if best.x.shape[0] > p else None
    if not bandwidth_in_regime(g, n):
        diagnostics.record("bandwidth_regime")
        logger.warning("Estimated g=%.4g lies outside the admissible band for n=%d", g, n)
    return FitResult(
        direction=normalize_direction(raw),
        raw=raw,
        raw_norm=raw_norm,
        bandwidth_g=g,
        objective=best.value,
        optimizer_evals=sum(o.evals for o in outcomes),
        converged=best.converged,
        estimator=estimator,
        gy=gy,
        scales=scales,
        start_objectives=tuple(o.initial_value for o in outcomes),
        floors_hit=sum(floors.get(k) for k in FLOOR_KEYS),
    )


def estimate_index_mean(
    dataset: Dataset,
    config: OptimizerConfig = OptimizerConfig(),
    *,
    warm_start: Optional[np.ndarray] = None,
    n_starts: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    kernel: KernelSpec = SMOOTHING_KERNEL,
    diagnostics: Optional[Diagnostics] = None,
) -> FitResult:
    """Semiparametric least-squares estimate of the index direction and g."""
    if dataset.p < 2:
        raise DimensionError("Index estimation needs p >= 2 covariates")
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    Xs, scales = standardize_covariates(dataset.X)
    y = dataset.y
    rng = rng if rng is not None else child_generator(config.seed, STREAM_OPTIMIZER)
    starts = _starting_directions(Xs, y, n_starts or config.starts, config, rng, warm_start)

    def objective(b: np.ndarray) -> float:
        value = _sls_value(_half_space(b), Xs, y, kernel)
        return value if np.isfinite(value) else np.inf

    outcomes = []
    for i, x0 in enumerate(starts):
        outcome = _run_start(objective, x0, config)
        logger.debug("SLS start %d: %.6g -> %.6g in %d evals", i, outcome.initial_value,
                     outcome.value, outcome.evals)
        outcomes.append(outcome)
    best = _best_of(outcomes, "sls")
    # floors are counted once, at the returned minimizer
    floors = Diagnostics()
    _sls_value(_half_space(best.x), Xs, y, kernel, floors)
    diagnostics.merge(floors)
    return _finish(best, outcomes, dataset.p, dataset.n, scales, "sls", diagnostics, floors)


def default_gy_start(n: int) -> float:
    """Rule-of-thumb bandwidth for normalized ranks R/n."""
    spread = math.sqrt((n * n - 1) / 12.0) / n
    return 1.06 * spread * n ** -0.2


def estimate_index_law(
    dataset: Dataset,
    config: OptimizerConfig = OptimizerConfig(),
    *,
    rng: Optional[np.random.Generator] = None,
    kernel: KernelSpec = SMOOTHING_KERNEL,
    diagnostics: Optional[Diagnostics] = None,
) -> FitResult:
    """Rank pseudo-likelihood estimate of (beta~, g_Y); direction and g from beta~."""
    if dataset.p < 2:
        raise DimensionError("Index estimation needs p >= 2 covariates")
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    Xs, scales = standardize_covariates(dataset.X)
    ranks = compute_ranks(dataset.y).astype(float)
    p = dataset.p
    rng = rng if rng is not None else child_generator(config.seed, STREAM_OPTIMIZER)
    log_gy = math.log(config.gy_start or default_gy_start(dataset.n))
    starts = [
        np.append(b, log_gy)
        for b in _starting_directions(Xs, ranks, config.starts, config, rng, None)
    ]

    def objective(theta: np.ndarray) -> float:
        g_y = math.exp(min(theta[p], 700.0))
        value = _law_value(_half_space(theta[:p]), g_y, Xs, ranks, kernel)
        return value if np.isfinite(value) else np.inf

    outcomes = []
    for i, x0 in enumerate(starts):
        outcome = _run_start(objective, x0, config)
        logger.debug("Rank start %d: %.6g -> %.6g in %d evals", i, outcome.initial_value,
                     outcome.value, outcome.evals)
        outcomes.append(outcome)
    best = _best_of(outcomes, "rank_likelihood")
    floors = Diagnostics()
    _law_value(_half_space(best.x[:p]), math.exp(min(best.x[p], 700.0)), Xs, ranks, kernel, floors)
    diagnostics.merge(floors)
    return _finish(best, outcomes, p, dataset.n, scales, "rank_likelihood", diagnostics, floors)
