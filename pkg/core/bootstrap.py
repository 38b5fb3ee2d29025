"""Wild-bootstrap calibration of the critical values.

Mean test: Y* = m + eta (Y - m) with m the leave-one-out fit at beta~, then
the index and g are re-estimated on every replicate while h stays fixed. A
known-index fit keeps beta and g fixed in the replicates as well.

Law test: the residual processes are multiplied by eta_i, i.e. the Gram
matrix becomes eta_i eta_j G_ij, and beta is not re-estimated.

Replicate b draws from the child stream (seed, bootstrap, b, attempt), and
results are stored in slot b, so thread count never changes the output.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import SimCheckError
from core.estimation import KNOWN_ESTIMATOR, estimate_index_mean, standardize_covariates
from core.geometry import index_frame
from core.kernels import SMOOTHING_KERNEL, TESTING_KERNEL, KernelSpec
from core.manifest import OptimizerConfig
from core.models import BootstrapResult, Dataset, Diagnostics, FitResult, ResidualFieldLaw
from core.smoothers import law_gram, loo_nadaraya_watson
from core.statistics import assemble, pair_weights, statistic_mean
from core.streams import STREAM_BOOTSTRAP, child_generator

logger = logging.getLogger(__name__)

SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + SQRT5) / 2.0
MAMMEN_P_LOW = (5.0 + SQRT5) / 10.0

MAX_REDRAWS = 3
DEGRADED_SHARE = 0.05

MultiplierDraw = Callable[[np.random.Generator, int], np.ndarray]


def mammen_multipliers(rng: np.random.Generator, n: int) -> np.ndarray:
    """i.i.d. draws of the two-point law with mean 0, variance 1, third moment 1."""
    return np.where(rng.random(n) < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)


def critical_value(replicates: np.ndarray, alpha: float) -> float:
    """The ceil((1 - alpha)(B + 1))-th order statistic; +inf if B is too small."""
    stats = np.sort(np.asarray(replicates, dtype=float))
    B = stats.shape[0]
    k = math.ceil(round((1.0 - alpha) * (B + 1), 9))
    if k > B or B == 0:
        return math.inf
    return float(stats[k - 1])


def bootstrap_p_value(replicates: np.ndarray, t_observed: float) -> float:
    """(1 + #{T* >= T_n}) / (B + 1)."""
    replicates = np.asarray(replicates, dtype=float)
    return (1.0 + float(np.count_nonzero(replicates >= t_observed))) / (replicates.shape[0] + 1.0)


def _result(replicates: np.ndarray, t_observed: float, alpha: float, seed: int, h: float,
            B: int, failures: int = 0, optimizer_calls: int = 0) -> BootstrapResult:
    ok = replicates[np.isfinite(replicates)]
    return BootstrapResult(
        replicate_stats=replicates,
        t_observed=float(t_observed),
        critical_value=critical_value(ok, alpha),
        p_value=bootstrap_p_value(ok, t_observed),
        B=B,
        alpha=alpha,
        seed=seed,
        h=float(h),
        failures=failures,
        optimizer_calls=optimizer_calls,
    )


def _map_slots(task: Callable[[int], object], B: int, n_jobs: int) -> List[object]:
    if n_jobs <= 1:
        return [task(b) for b in range(B)]
    with ThreadPoolExecutor(max_workers=n_jobs) as executor:
        # map preserves replicate order regardless of completion order
        return list(executor.map(task, range(B)))


# ---------------------------------------------------------------------------
# Mean test
# ---------------------------------------------------------------------------

def bootstrap_mean_multi(
    dataset: Dataset,
    fit: FitResult,
    hs: Sequence[float],
    B: int,
    alpha: float,
    seed: int,
    *,
    config: OptimizerConfig = OptimizerConfig(),
    smoothing: KernelSpec = SMOOTHING_KERNEL,
    testing: KernelSpec = TESTING_KERNEL,
    n_jobs: int = 1,
    multiplier_draw: MultiplierDraw = mammen_multipliers,
    diagnostics: Optional[Diagnostics] = None,
) -> List[BootstrapResult]:
    """Residual wild bootstrap with re-estimation, one result per bandwidth h.

    Re-estimation does not depend on h, so every replicate fit serves all of ``hs``.
    A known-index ``fit`` is reused as is by every replicate.
    """
    Xs, _ = standardize_covariates(dataset.X)
    standardized = Dataset(y=dataset.y, X=Xs)
    y = dataset.y
    known = fit.estimator == KNOWN_ESTIMATOR
    # an estimated fit already counted its floors at beta~
    m_hat = loo_nadaraya_watson(y, Xs @ fit.raw, smoothing,
                                diagnostics if known else None).values
    resid = y - m_hat
    frame = index_frame(fit.direction)
    observed = [statistic_mean(standardized, frame, fit.bandwidth_g, h, smoothing, testing).t_n
                for h in hs]

    def replicate(b: int) -> Tuple[List[float], int, int, Diagnostics]:
        local = Diagnostics()
        calls = 0
        for attempt in range(MAX_REDRAWS + 1):
            rng = child_generator(seed, STREAM_BOOTSTRAP, b, attempt)
            eta = multiplier_draw(rng, dataset.n)
            # equals m + eta (y - m), and reproduces y exactly when eta == 1
            y_star = y + (eta - 1.0) * resid
            try:
                if known or np.array_equal(y_star, y):
                    fit_star = fit
                else:
                    calls += 1
                    fit_star = estimate_index_mean(
                        dataset.with_response(y_star),
                        config,
                        warm_start=fit.raw,
                        n_starts=config.bootstrap_starts,
                        rng=rng,
                        kernel=smoothing,
                    )
                frame_star = index_frame(fit_star.direction)
                star = Dataset(y=y_star, X=Xs)
                stats = [statistic_mean(star, frame_star, fit_star.bandwidth_g, h,
                                        smoothing, testing).t_n for h in hs]
                return stats, 0, calls, local
            except SimCheckError as e:
                local.record("bootstrap_redraw")
                logger.debug("Replicate %d attempt %d failed: %s", b, attempt, e)
        return [math.nan] * len(hs), 1, calls, local

    outcomes = _map_slots(replicate, B, n_jobs)
    replicates = np.array([o[0] for o in outcomes], dtype=float).reshape(B, len(hs))
    failures = sum(o[1] for o in outcomes)
    calls = sum(o[2] for o in outcomes)
    if diagnostics is not None:
        for o in outcomes:
            diagnostics.merge(o[3])
        diagnostics.record("bootstrap_failures", failures)
    if B and failures / B > DEGRADED_SHARE:
        logger.warning("Bootstrap degraded: %d of %d replicates failed", failures, B)
    logger.info("Mean bootstrap finished: B=%d, failures=%d, optimizer calls=%d", B, failures, calls)
    return [
        _result(replicates[:, k], observed[k], alpha, seed, h, B, failures, calls)
        for k, h in enumerate(hs)
    ]


def bootstrap_mean(dataset: Dataset, fit: FitResult, h: float, B: int, alpha: float, seed: int,
                   **kwargs) -> BootstrapResult:
    """Residual wild bootstrap with re-estimation at a single bandwidth h."""
    return bootstrap_mean_multi(dataset, fit, [h], B, alpha, seed, **kwargs)[0]


# ---------------------------------------------------------------------------
# Law test
# ---------------------------------------------------------------------------

def _draw_matrix(seed: int, B: int, n: int, multiplier_draw: MultiplierDraw) -> np.ndarray:
    """n x B multipliers, column b from child stream b."""
    columns = [multiplier_draw(child_generator(seed, STREAM_BOOTSTRAP, b, 0), n) for b in range(B)]
    return np.column_stack(columns) if columns else np.zeros((n, 0))


def _multiplier_statistics(gram: np.ndarray, weights: np.ndarray, h: float,
                           eta: np.ndarray) -> np.ndarray:
    """T* for each column of eta with Gram*_ij = eta_i eta_j G_ij."""
    n = gram.shape[0]
    A = gram * weights
    i_star = np.sum(eta * (A @ eta), axis=0) / (n * (n - 1) * h)
    eta_sq = eta * eta
    v_sq = 2.0 * np.sum(eta_sq * ((A * A) @ eta_sq), axis=0) / (n * n * (n - 1) ** 2 * h * h)
    v_star = np.sqrt(v_sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v_star > 0, i_star / v_star, np.nan)


def bootstrap_law_multi(
    gram: np.ndarray,
    Z: np.ndarray,
    W: np.ndarray,
    hs: Sequence[float],
    B: int,
    alpha: float,
    seed: int,
    *,
    testing: KernelSpec = TESTING_KERNEL,
    multiplier_draw: MultiplierDraw = mammen_multipliers,
) -> List[BootstrapResult]:
    """Multiplier bootstrap on the residual processes, given their Gram matrix.

    No re-estimation: the Gram matrix of the observed fit is rescaled per replicate.
    """
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    eta = _draw_matrix(seed, B, n, multiplier_draw)
    results = []
    for h in hs:
        weights = pair_weights(Z, W, h, testing)
        observed = assemble(gram, weights, h).t_n
        replicates = _multiplier_statistics(gram, weights, h, eta)
        results.append(_result(replicates, observed, alpha, seed, h, B,
                               failures=int(np.count_nonzero(~np.isfinite(replicates)))))
    logger.info("Law bootstrap finished: B=%d, bandwidths=%d", B, len(hs))
    return results


def bootstrap_law(field: ResidualFieldLaw, Z, W, h: float, B: int, alpha: float, seed: int,
                  **kwargs) -> BootstrapResult:
    """Multiplier bootstrap for the law test at a single bandwidth h."""
    return bootstrap_law_multi(law_gram(field), Z, W, [h], B, alpha, seed, **kwargs)[0]
