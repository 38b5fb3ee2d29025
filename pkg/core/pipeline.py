"""Pipeline: the end-to-end execution of one mean or law test.

Stages, each followed by its registered checks:
1. intake     - sample size checks on the raw dataset
2. fit        - index estimation on standardized covariates (or a known index)
3. statistic  - I_n, v_n, T_n at every requested h, plus the PSD diagnostic
4. bootstrap  - wild-bootstrap critical values and p-values
Error checks stop the run with SpecError; warning checks land in the report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from core.bootstrap import bootstrap_law_multi, bootstrap_mean_multi
from core.estimation import KNOWN_ESTIMATOR, estimate_index_law, estimate_index_mean, standardize_covariates
from core.geometry import index_frame, normalize_direction, project
from core.manifest import OptimizerConfig, PhiMode, RunConfig
from core.models import (
    BootstrapResult,
    Dataset,
    Diagnostics,
    FitResult,
    Hypothesis,
    IndexFrame,
    StatisticOutput,
    TestReport,
)
from core.specs import CheckContext, enforce, evaluate_specs
from core.statistics import full_quadratic_psd_check, law_inner, mean_inner, quadratic_form

logger = logging.getLogger(__name__)

INTAKE_SPECS = ["sample_size"]
FIT_SPECS = ["frame_orthonormal", "complement_fallback", "bandwidth_regime"]
STATISTIC_SPECS = ["bandwidth_ratio", "gram_psd", "smoother_floors"]
BOOTSTRAP_SPECS = ["bootstrap_failures"]


@dataclass(frozen=True, eq=False)
class Evaluation:
    """The statistic and its bootstrap calibration at one bandwidth."""
    statistic: StatisticOutput
    bootstrap: BootstrapResult
    psd_diagnostic: float


def bandwidth_h(n: int, c: float) -> float:
    """h = c n^{-2/9}."""
    return c * n ** (-2.0 / 9.0)


def standardized(dataset: Dataset) -> Dataset:
    Xs, _ = standardize_covariates(dataset.X)
    return Dataset(y=dataset.y, X=Xs)


def fit_index(hypothesis: Hypothesis, dataset: Dataset, optimizer: OptimizerConfig,
              diagnostics: Optional[Diagnostics] = None) -> FitResult:
    if hypothesis is Hypothesis.MEAN:
        fit = estimate_index_mean(dataset, optimizer, diagnostics=diagnostics)
    else:
        fit = estimate_index_law(dataset, optimizer, diagnostics=diagnostics)
    logger.info("Fitted %s index: beta=%s, g=%.4g, evals=%d", fit.estimator,
                np.array2string(fit.direction.beta, precision=4), fit.bandwidth_g,
                fit.optimizer_evals)
    return fit


def known_index_fit(dataset: Dataset, beta, g: float) -> FitResult:
    """A FitResult for a known direction ``beta`` and bandwidth ``g`` in original units,
    expressed in the standardized coordinates used downstream."""
    _, scales = standardize_covariates(dataset.X)
    base = normalize_direction(beta).beta
    stretched = base * scales
    length = float(np.linalg.norm(stretched))
    g_std = g / length
    raw = stretched / length / g_std
    return FitResult(
        direction=normalize_direction(stretched),
        raw=raw,
        raw_norm=float(np.linalg.norm(raw)),
        bandwidth_g=g_std,
        objective=float("nan"),
        optimizer_evals=0,
        converged=True,
        estimator=KNOWN_ESTIMATOR,
        scales=scales,
    )


def _residual_inner(hypothesis: Hypothesis, data: Dataset, frame: IndexFrame, g: float,
                    phi: PhiMode) -> np.ndarray:
    if hypothesis is Hypothesis.MEAN:
        return mean_inner(data, frame, g)
    return law_inner(data, frame, g, fixed_cdf=phi is PhiMode.NORMAL)


def observed_statistics(hypothesis: Hypothesis, dataset: Dataset, fit: FitResult,
                        hs: Sequence[float], phi: PhiMode = PhiMode.EMPIRICAL) -> List[StatisticOutput]:
    """T_n at each bandwidth in ``hs`` without any bootstrap."""
    data = standardized(dataset)
    frame = index_frame(fit.direction)
    Z, W = project(data.X, frame)
    inner = _residual_inner(hypothesis, data, frame, fit.bandwidth_g, phi)
    return [quadratic_form(inner, Z, W, h) for h in hs]


def evaluate(
    hypothesis: Hypothesis,
    dataset: Dataset,
    fit: FitResult,
    hs: Sequence[float],
    B: int,
    alpha: float,
    seed: int,
    *,
    optimizer: OptimizerConfig = OptimizerConfig(),
    phi: PhiMode = PhiMode.EMPIRICAL,
    threads: int = 1,
    diagnostics: Optional[Diagnostics] = None,
) -> List[Evaluation]:
    """Statistic, PSD diagnostic and bootstrap at each bandwidth in ``hs``.

    ``dataset`` carries the original covariates; standardization happens here.
    """
    data = standardized(dataset)
    frame = index_frame(fit.direction)
    Z, W = project(data.X, frame)
    inner = _residual_inner(hypothesis, data, frame, fit.bandwidth_g, phi)

    if hypothesis is Hypothesis.MEAN:
        boots = bootstrap_mean_multi(dataset, fit, hs, B, alpha, seed, config=optimizer,
                                     n_jobs=threads, diagnostics=diagnostics)
    else:
        boots = bootstrap_law_multi(inner, Z, W, hs, B, alpha, seed)

    evaluations = []
    for h, boot in zip(hs, boots):
        statistic = quadratic_form(inner, Z, W, h)
        psd = full_quadratic_psd_check(inner, Z, W, h)
        evaluations.append(Evaluation(statistic=statistic, bootstrap=boot, psd_diagnostic=psd))
    return evaluations


def run_test(dataset: Dataset, config: RunConfig) -> TestReport:
    """Run the mean or law test described by ``config`` on ``dataset``."""
    hypothesis = Hypothesis.LAW if config.is_law else Hypothesis.MEAN
    diagnostics = Diagnostics()
    h = config.h if config.h is not None else bandwidth_h(dataset.n, config.c)
    context = CheckContext(dataset=dataset, h=h, diagnostics=diagnostics)
    warnings: List[str] = []

    warnings += enforce(evaluate_specs(INTAKE_SPECS, context))

    context.fit = fit_index(hypothesis, dataset, config.optimizer, diagnostics)
    context.frame = index_frame(context.fit.direction)
    warnings += enforce(evaluate_specs(FIT_SPECS, context))

    evaluation = evaluate(
        hypothesis, dataset, context.fit, [h], config.bootstrap_size, config.alpha, config.seed,
        optimizer=config.optimizer, phi=config.phi, threads=config.threads,
        diagnostics=diagnostics,
    )[0]
    context.statistic = evaluation.statistic
    context.psd_diagnostic = evaluation.psd_diagnostic
    context.bootstrap = evaluation.bootstrap
    warnings += enforce(evaluate_specs(STATISTIC_SPECS + BOOTSTRAP_SPECS, context))

    for message in warnings:
        logger.warning(message)

    return TestReport(
        kind=hypothesis,
        n=dataset.n,
        p=dataset.p,
        h=h,
        c=config.c,
        h_override=config.h is not None,
        statistic=evaluation.statistic,
        fit=context.fit,
        bootstrap=evaluation.bootstrap,
        seed=config.seed,
        psd_diagnostic=evaluation.psd_diagnostic,
        warnings=warnings,
    )
