"""Simulation models for the level and power studies.

Mean model:  Y = X'b0 + 4 exp(-(X'b0)^2) + delta ||X|| + sigma eps,
             X ~ N(0, I_p), b0 = (1, 1, 0, ..., 0) left unnormalized.
Law model:   Y | X ~ (1 - delta) N(X'b0, 0.09) + delta N(||X||, 0.09),
             X ~ N(0, I_2), b0 = (1, 1) / sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.errors import ConfigError
from core.manifest import ModelBlock
from core.models import Dataset

LAW_VARIANCE = 0.09


class NoiseKind(str, Enum):
    HOMOSCEDASTIC_NORMAL = "homoscedastic-normal"
    HETERO_LOGNORMAL = "hetero-lognormal"


class Mixing(str, Enum):
    MIXTURE = "mixture"
    CONVEX = "convex"


@dataclass(frozen=True)
class MeanModelConfig:
    n: int
    p: int = 2
    delta: float = 0.0
    noise: NoiseKind = NoiseKind.HOMOSCEDASTIC_NORMAL
    sigma: float = 0.3

    def __post_init__(self):
        if self.n < 10:
            raise ConfigError(f"n must be >= 10, got {self.n}")
        if self.p < 2:
            raise ConfigError(f"p must be >= 2, got {self.p}")
        if self.delta < 0:
            raise ConfigError(f"delta must be nonnegative, got {self.delta}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")

    @property
    def model_id(self) -> str:
        return "mean-hetero" if self.noise is NoiseKind.HETERO_LOGNORMAL else "mean-homo"

    @property
    def beta0(self) -> np.ndarray:
        return mean_beta0(self.p)

    def with_delta(self, delta: float) -> MeanModelConfig:
        return MeanModelConfig(n=self.n, p=self.p, delta=delta, noise=self.noise, sigma=self.sigma)


@dataclass(frozen=True)
class LawModelConfig:
    n: int
    delta: float = 0.0
    mixing: Mixing = Mixing.MIXTURE

    def __post_init__(self):
        if self.n < 10:
            raise ConfigError(f"n must be >= 10, got {self.n}")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta is a mixture proportion in [0, 1], got {self.delta}")

    @property
    def p(self) -> int:
        return 2

    @property
    def model_id(self) -> str:
        return "law"

    @property
    def beta0(self) -> np.ndarray:
        return np.array([1.0, 1.0]) / math.sqrt(2.0)

    def with_delta(self, delta: float) -> LawModelConfig:
        return LawModelConfig(n=self.n, delta=delta, mixing=self.mixing)


def mean_beta0(p: int) -> np.ndarray:
    beta = np.zeros(p)
    beta[:2] = 1.0
    return beta


def hetero_lognormal_noise(rng: np.random.Generator, X: np.ndarray) -> np.ndarray:
    """(LN(0,1) - sqrt(e)) * sqrt((1 + X_2^2) / 2): mean zero, scale driven by X_2."""
    centered = rng.lognormal(0.0, 1.0, size=X.shape[0]) - math.sqrt(math.e)
    return centered * np.sqrt((1.0 + X[:, 1] ** 2) / 2.0)


def generate_mean_model(cfg: MeanModelConfig, rng: np.random.Generator) -> Dataset:
    X = rng.standard_normal((cfg.n, cfg.p))
    index = X @ cfg.beta0
    if cfg.noise is NoiseKind.HETERO_LOGNORMAL:
        eps = hetero_lognormal_noise(rng, X)
    else:
        eps = rng.standard_normal(cfg.n)
    y = index + 4.0 * np.exp(-index ** 2) + cfg.delta * np.linalg.norm(X, axis=1) + cfg.sigma * eps
    return Dataset(y=y, X=X)


def generate_law_model(cfg: LawModelConfig, rng: np.random.Generator) -> Dataset:
    X = rng.standard_normal((cfg.n, 2))
    sd = math.sqrt(LAW_VARIANCE)
    null_draw = X @ cfg.beta0 + sd * rng.standard_normal(cfg.n)
    alt_draw = np.linalg.norm(X, axis=1) + sd * rng.standard_normal(cfg.n)
    if cfg.mixing is Mixing.CONVEX:
        y = (1.0 - cfg.delta) * null_draw + cfg.delta * alt_draw
    else:
        component = rng.random(cfg.n) < cfg.delta
        y = np.where(component, alt_draw, null_draw)
    return Dataset(y=y, X=X)


ModelConfig = MeanModelConfig | LawModelConfig


def generate(cfg: ModelConfig, rng: np.random.Generator) -> Dataset:
    if isinstance(cfg, LawModelConfig):
        return generate_law_model(cfg, rng)
    return generate_mean_model(cfg, rng)


def model_from_block(block: ModelBlock) -> ModelConfig:
    """Translate a manifest model block into a generator config."""
    if block.is_law:
        return LawModelConfig(n=block.n, delta=block.delta, mixing=Mixing(block.mixing))
    noise = NoiseKind.HETERO_LOGNORMAL if block.kind == "mean-hetero" else NoiseKind.HOMOSCEDASTIC_NORMAL
    return MeanModelConfig(n=block.n, p=block.p, delta=block.delta, noise=noise, sigma=block.sigma)
