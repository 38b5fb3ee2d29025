"""Tests for the simulation models and random streams."""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from core.errors import ConfigError
from core.manifest import ModelBlock
from core.streams import STREAM_BOOTSTRAP, STREAM_DATA, child_generator, child_seed
from experiments.generators import (
    LAW_VARIANCE,
    LawModelConfig,
    MeanModelConfig,
    Mixing,
    NoiseKind,
    generate_law_model,
    generate_mean_model,
    hetero_lognormal_noise,
    model_from_block,
)


# ---------------------------------------------------------------------------
# Mean model
# ---------------------------------------------------------------------------

class TestMeanModel:
    def test_noise_free_limit(self):
        cfg = MeanModelConfig(n=200, p=3, sigma=1e-12)
        data = generate_mean_model(cfg, np.random.default_rng(0))
        index = data.X @ np.array([1.0, 1.0, 0.0])
        np.testing.assert_allclose(data.y, index + 4.0 * np.exp(-index ** 2), atol=1e-9)

    def test_alternative_adds_norm(self):
        base = generate_mean_model(MeanModelConfig(n=50, sigma=0.3), np.random.default_rng(1))
        alt = generate_mean_model(MeanModelConfig(n=50, sigma=0.3, delta=0.5), np.random.default_rng(1))
        np.testing.assert_allclose(alt.y - base.y, 0.5 * np.linalg.norm(base.X, axis=1), atol=1e-12)

    def test_reproducible(self):
        cfg = MeanModelConfig(n=30, p=4, noise=NoiseKind.HETERO_LOGNORMAL)
        a = generate_mean_model(cfg, np.random.default_rng(7))
        b = generate_mean_model(cfg, np.random.default_rng(7))
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.X, b.X)

    def test_hetero_noise_centered(self):
        rng = np.random.default_rng(3)
        draws = rng.lognormal(0.0, 1.0, size=1_000_000) - math.sqrt(math.e)
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean()) < 3 * se

    def test_hetero_noise_scale_follows_second_covariate(self):
        X = np.zeros((4, 2))
        X[:, 1] = [0.0, 1.0, 2.0, 3.0]
        a = hetero_lognormal_noise(np.random.default_rng(2), X)
        base = hetero_lognormal_noise(np.random.default_rng(2), np.zeros((4, 2)))
        np.testing.assert_allclose(a, base * np.sqrt((1.0 + X[:, 1] ** 2)) , rtol=1e-12)

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            MeanModelConfig(n=5)
        with pytest.raises(ConfigError):
            MeanModelConfig(n=50, p=1)


# ---------------------------------------------------------------------------
# Law model
# ---------------------------------------------------------------------------

class TestLawModel:
    def test_null_is_normal_around_index(self):
        cfg = LawModelConfig(n=10_000)
        data = generate_law_model(cfg, np.random.default_rng(4))
        z = (data.y - data.X @ cfg.beta0) / math.sqrt(LAW_VARIANCE)
        assert kstest(z, "norm").statistic < 0.05

    def test_full_alternative_depends_on_norm_only(self):
        cfg = LawModelConfig(n=2000, delta=1.0)
        data = generate_law_model(cfg, np.random.default_rng(5))
        z = (data.y - np.linalg.norm(data.X, axis=1)) / math.sqrt(LAW_VARIANCE)
        assert kstest(z, "norm").statistic < 0.05

    def test_convex_mixing(self):
        mix = generate_law_model(LawModelConfig(n=40, delta=0.5, mixing=Mixing.CONVEX), np.random.default_rng(6))
        assert mix.n == 40 and mix.p == 2

    def test_reproducible(self):
        cfg = LawModelConfig(n=25, delta=0.3)
        a = generate_law_model(cfg, np.random.default_rng(8))
        b = generate_law_model(cfg, np.random.default_rng(8))
        np.testing.assert_array_equal(a.y, b.y)

    def test_delta_range(self):
        with pytest.raises(ConfigError):
            LawModelConfig(n=20, delta=1.5)


class TestModelFromBlock:
    def test_mean_hetero(self):
        cfg = model_from_block(ModelBlock(kind="mean-hetero", n=100, p=4))
        assert isinstance(cfg, MeanModelConfig)
        assert cfg.noise is NoiseKind.HETERO_LOGNORMAL
        assert cfg.model_id == "mean-hetero"

    def test_law(self):
        cfg = model_from_block(ModelBlock(kind="law", n=100, p=2, delta=0.2, mixing="convex"))
        assert isinstance(cfg, LawModelConfig)
        assert cfg.mixing is Mixing.CONVEX
        assert cfg.delta == 0.2


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------

class TestStreams:
    def test_same_key_same_draws(self):
        a = child_generator(42, STREAM_DATA, 3).standard_normal(5)
        b = child_generator(42, STREAM_DATA, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        a = child_generator(42, STREAM_DATA, 3).standard_normal(5)
        b = child_generator(42, STREAM_BOOTSTRAP, 3).standard_normal(5)
        c = child_generator(43, STREAM_DATA, 3).standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_child_seed_is_stable_63_bit(self):
        s = child_seed(7, 1, 2)
        assert s == child_seed(7, 1, 2)
        assert 0 <= s < 2 ** 63
