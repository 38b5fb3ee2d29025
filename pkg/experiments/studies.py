"""Monte Carlo drivers: level and power studies and the perturbation probe.

Every replication draws its data from the child stream (seed, data, cell, r)
and its bootstrap multipliers from (seed, bootstrap, cell, r), so a study row
is reproducible from (seed, config) whatever the thread count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
import pandas as pd

from core.errors import SimCheckError
from core.geometry import normalize_direction
from core.manifest import OptimizerConfig, PhiMode
from core.models import Dataset, FitResult, Hypothesis
from core.pipeline import bandwidth_h, evaluate, fit_index, known_index_fit, observed_statistics
from core.streams import STREAM_BOOTSTRAP, STREAM_DATA, STREAM_OPTIMIZER, STREAM_PROBE, child_generator, child_seed
from experiments.generators import LawModelConfig, ModelConfig, generate

logger = logging.getLogger(__name__)

ASYMPTOTIC = "asymptotic"
BOOTSTRAP = "bootstrap"
METHODS = (ASYMPTOTIC, BOOTSTRAP)

KNOWN_G_EXPONENT = 0.225

T = TypeVar("T")


@dataclass(frozen=True)
class StudyRow:
    model: str
    n: int
    p: int
    delta: float
    c: float
    method: str
    rejections: int
    replications: int
    failures: int
    seed: int

    @property
    def rate(self) -> float:
        return self.rejections / self.replications if self.replications else math.nan

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "p": self.p,
            "delta": self.delta,
            "c": self.c,
            "method": self.method,
            "rejections": self.rejections,
            "replications": self.replications,
            "failures": self.failures,
            "rate": self.rate,
            "seed": self.seed,
        }


@dataclass
class MonteCarloReport:
    """Rejection counts per (model, n, p, delta, c, method) cell."""
    study: str
    rows: List[StudyRow] = field(default_factory=list)
    alpha: float = 0.10
    B: int = 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows],
                            columns=["model", "n", "p", "delta", "c", "method", "rejections",
                                     "replications", "failures", "rate", "seed"])

    def plot_frame(self) -> pd.DataFrame:
        """x (c for level studies, delta for power studies) against one rate column per method."""
        x = "c" if self.study == "level" else "delta"
        frame = self.to_frame().pivot(index=x, columns="method", values="rate")
        frame = frame.reindex(columns=[m for m in METHODS if m in frame.columns])
        frame.columns.name = None
        return frame.reset_index()

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False)

    def plot_csv(self, path: str | Path) -> None:
        self.plot_frame().to_csv(path, index=False)

    def rate(self, method: str, *, c: Optional[float] = None, delta: Optional[float] = None) -> float:
        for row in self.rows:
            if row.method == method and (c is None or row.c == c) and (delta is None or row.delta == delta):
                return row.rate
        raise KeyError(f"No row for method={method}, c={c}, delta={delta}")


@dataclass(frozen=True)
class ProbeSummary:
    """Distribution of |T_n(perturbed) - T_n(beta0)| over paired replications."""
    magnitude: float
    reps: int
    failures: int
    abs_changes: np.ndarray
    relative_changes: np.ndarray

    @property
    def median_abs_change(self) -> float:
        return float(np.median(self.abs_changes)) if self.abs_changes.size else math.nan

    @property
    def mean_abs_change(self) -> float:
        return float(np.mean(self.abs_changes)) if self.abs_changes.size else math.nan

    @property
    def median_relative_change(self) -> float:
        return float(np.median(self.relative_changes)) if self.relative_changes.size else math.nan

    def to_dict(self) -> dict:
        return {
            "magnitude": self.magnitude,
            "reps": self.reps,
            "failures": self.failures,
            "median_abs_change": self.median_abs_change,
            "mean_abs_change": self.mean_abs_change,
            "median_relative_change": self.median_relative_change,
        }


def hypothesis_for(cfg: ModelConfig) -> Hypothesis:
    return Hypothesis.LAW if isinstance(cfg, LawModelConfig) else Hypothesis.MEAN


def known_bandwidth(n: int) -> float:
    return n ** -KNOWN_G_EXPONENT


def _map(task: Callable[[int], T], count: int, threads: int) -> List[T]:
    if threads <= 1:
        return [task(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(task, range(count)))


def _fit(hypothesis: Hypothesis, cfg: ModelConfig, dataset: Dataset, optimizer: OptimizerConfig,
         known_index: bool) -> FitResult:
    if known_index:
        return known_index_fit(dataset, cfg.beta0, known_bandwidth(dataset.n))
    return fit_index(hypothesis, dataset, optimizer)


def _rejection_cells(
    cfg: ModelConfig,
    cell: int,
    hs: Sequence[float],
    reps: int,
    B: int,
    alpha: float,
    seed: int,
    optimizer: OptimizerConfig,
    threads: int,
    known_index: bool,
    phi: PhiMode,
):
    """Rejection counts per h for both methods, plus the failed replication count."""
    hypothesis = hypothesis_for(cfg)

    def replicate(r: int) -> Optional[np.ndarray]:
        dataset = generate(cfg, child_generator(seed, STREAM_DATA, cell, r))
        local = replace(optimizer, seed=child_seed(seed, STREAM_OPTIMIZER, cell, r))
        try:
            fit = _fit(hypothesis, cfg, dataset, local, known_index)
            evaluations = evaluate(hypothesis, dataset, fit, hs, B, alpha,
                                   child_seed(seed, STREAM_BOOTSTRAP, cell, r),
                                   optimizer=local, phi=phi)
        except SimCheckError as e:
            logger.debug("Replication %d of cell %d failed: %s", r, cell, e)
            return None
        return np.array([[e.statistic.p_value < alpha, e.bootstrap.reject] for e in evaluations])

    outcomes = _map(replicate, reps, threads)
    done = [o for o in outcomes if o is not None]
    counts = np.sum(done, axis=0).astype(int) if done else np.zeros((len(hs), 2), dtype=int)
    return counts, reps - len(done)


def run_level_study(
    cfg: ModelConfig,
    c_grid: Sequence[float],
    B: int,
    reps: int,
    alpha: float,
    seed: int,
    *,
    optimizer: OptimizerConfig = OptimizerConfig(),
    threads: int = 1,
    known_index: bool = False,
    phi: PhiMode = PhiMode.EMPIRICAL,
) -> MonteCarloReport:
    """Rejection rates under the null across a grid of bandwidth factors c.

    Each replication fits once and reuses its fit and bootstrap draws for every c.
    """
    if cfg.delta != 0.0:
        raise ValueError("A level study runs under the null: delta must be 0")
    hs = [bandwidth_h(cfg.n, c) for c in c_grid]
    counts, failures = _rejection_cells(cfg, 0, hs, reps, B, alpha, seed, optimizer, threads,
                                        known_index, phi)
    report = MonteCarloReport(study="level", alpha=alpha, B=B)
    for k, c in enumerate(c_grid):
        for m, method in enumerate(METHODS):
            report.rows.append(StudyRow(model=cfg.model_id, n=cfg.n, p=cfg.p, delta=0.0, c=float(c),
                                        method=method, rejections=int(counts[k, m]),
                                        replications=reps, failures=failures, seed=seed))
    logger.info("Level study done: model=%s n=%d reps=%d failures=%d", cfg.model_id, cfg.n,
                reps, failures)
    return report


def run_power_study(
    cfg: ModelConfig,
    delta_grid: Sequence[float],
    c: float,
    B: int,
    reps: int,
    alpha: float,
    seed: int,
    *,
    null_reps: Optional[int] = None,
    optimizer: OptimizerConfig = OptimizerConfig(),
    threads: int = 1,
    known_index: bool = False,
    phi: PhiMode = PhiMode.EMPIRICAL,
) -> MonteCarloReport:
    """Rejection rates at bandwidth factor c across the alternatives in ``delta_grid``."""
    if 0.0 not in [float(d) for d in delta_grid]:
        raise ValueError("delta_grid must include 0")
    h = bandwidth_h(cfg.n, c)
    report = MonteCarloReport(study="power", alpha=alpha, B=B)
    for cell, delta in enumerate(delta_grid):
        cell_reps = null_reps if (delta == 0.0 and null_reps) else reps
        counts, failures = _rejection_cells(cfg.with_delta(float(delta)), cell, [h], cell_reps, B,
                                            alpha, seed, optimizer, threads, known_index, phi)
        for m, method in enumerate(METHODS):
            report.rows.append(StudyRow(model=cfg.model_id, n=cfg.n, p=cfg.p, delta=float(delta),
                                        c=float(c), method=method, rejections=int(counts[0, m]),
                                        replications=cell_reps, failures=failures, seed=seed))
        logger.info("Power cell delta=%g done: asymptotic=%d bootstrap=%d of %d", delta,
                    counts[0, 0], counts[0, 1], cell_reps)
    return report


def null_statistic_sample(cfg: ModelConfig, reps: int, c: float, seed: int,
                          phi: PhiMode = PhiMode.EMPIRICAL) -> np.ndarray:
    """T_n at the true index over ``reps`` null datasets (no estimation, no bootstrap)."""
    hypothesis = hypothesis_for(cfg)
    h = bandwidth_h(cfg.n, c)
    values = []
    for r in range(reps):
        dataset = generate(cfg, child_generator(seed, STREAM_DATA, 0, r))
        fit = known_index_fit(dataset, cfg.beta0, known_bandwidth(cfg.n))
        try:
            values.append(observed_statistics(hypothesis, dataset, fit, [h], phi)[0].t_n)
        except SimCheckError as e:
            logger.debug("Null replication %d skipped: %s", r, e)
    return np.array(values)


def perturbation_stability_probe(
    cfg: ModelConfig,
    magnitude: float,
    reps: int,
    seed: int,
    *,
    c: float = 1.0,
    phi: PhiMode = PhiMode.EMPIRICAL,
) -> ProbeSummary:
    """Compare T_n at beta0 with T_n at beta0 + magnitude * u, u a random unit vector.

    Data and u depend on (seed, r) only, so probes at different magnitudes are paired.
    """
    hypothesis = hypothesis_for(cfg)
    h = bandwidth_h(cfg.n, c)
    g = known_bandwidth(cfg.n)
    base = normalize_direction(cfg.beta0).beta
    abs_changes, relative_changes = [], []
    failures = 0
    for r in range(reps):
        dataset = generate(cfg, child_generator(seed, STREAM_PROBE, 0, r))
        u = child_generator(seed, STREAM_PROBE, 1, r).standard_normal(cfg.p)
        u /= np.linalg.norm(u)
        try:
            reference = observed_statistics(
                hypothesis, dataset, known_index_fit(dataset, base + 0.0 * u, g), [h], phi)[0].t_n
            perturbed = observed_statistics(
                hypothesis, dataset, known_index_fit(dataset, base + magnitude * u, g), [h], phi)[0].t_n
        except SimCheckError as e:
            logger.debug("Probe replication %d skipped: %s", r, e)
            failures += 1
            continue
        change = abs(perturbed - reference)
        abs_changes.append(change)
        relative_changes.append(change / abs(reference) if reference != 0 else (0.0 if change == 0 else math.inf))
    logger.info("Probe magnitude=%.4g: %d reps, %d failures", magnitude, reps, failures)
    return ProbeSummary(magnitude=float(magnitude), reps=reps, failures=failures,
                        abs_changes=np.array(abs_changes), relative_changes=np.array(relative_changes))
