"""Tests for I_n, v_n and T_n: loop oracles and invariances."""

import math

import numpy as np
import pytest

from core.errors import DegenerateStatisticError, DimensionError, DomainError
from core.geometry import index_frame, normalize_direction, project
from core.models import Dataset
from core.smoothers import compute_ranks, law_gram, residual_field_law, residual_field_law_fixed
from core.statistics import (
    full_quadratic_psd_check,
    law_inner,
    mean_inner,
    pair_weights,
    quadratic_form,
    statistic_law,
    statistic_mean,
)
from tests import naive


def _instance(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 13))
    p = int(rng.integers(2, 4))
    X = rng.standard_normal((n, p))
    y = X[:, 0] + 0.5 * X[:, -1] ** 2 + 0.2 * rng.standard_normal(n)
    frame = index_frame(normalize_direction(rng.standard_normal(p) + np.eye(p)[0]))
    g = float(rng.uniform(0.3, 1.2))
    h = float(rng.uniform(0.3, 1.2))
    return Dataset(y=y, X=X), frame, g, h


# ---------------------------------------------------------------------------
# Oracle equivalence
# ---------------------------------------------------------------------------

class TestOracle:
    @pytest.mark.parametrize("seed", range(25))
    def test_mean_statistic_matches_loops(self, seed):
        data, frame, g, h = _instance(seed)
        out = statistic_mean(data, frame, g, h)
        Z, W = project(data.X, frame)
        V = naive.mean_field(data.y, Z, g)
        i_n, v_n, t_n = naive.statistic(np.outer(V, V), Z, W, h)
        assert out.i_n == pytest.approx(i_n, rel=1e-10, abs=1e-10 * v_n)
        assert out.v_n == pytest.approx(v_n, rel=1e-10)
        assert out.t_n == pytest.approx(t_n, rel=1e-10, abs=1e-10)

    @pytest.mark.parametrize("seed", range(25))
    def test_law_statistic_matches_loops(self, seed):
        data, frame, g, h = _instance(seed)
        out = statistic_law(data, frame, g, h)
        Z, W = project(data.X, frame)
        inner = naive.law_inner(naive.law_field(data.y, Z, g))
        i_n, v_n, t_n = naive.statistic(inner, Z, W, h)
        assert out.i_n == pytest.approx(i_n, rel=1e-10, abs=1e-10 * v_n)
        assert out.v_n == pytest.approx(v_n, rel=1e-10)
        assert out.t_n == pytest.approx(t_n, rel=1e-10, abs=1e-10)


# ---------------------------------------------------------------------------
# Invariances
# ---------------------------------------------------------------------------

class TestInvariance:
    def test_mean_affine_response(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        base = statistic_mean(small_dataset, frame, 0.6, 0.8).t_n
        moved = statistic_mean(small_dataset.with_response(-2.5 * small_dataset.y + 7.0), frame, 0.6, 0.8).t_n
        assert moved == pytest.approx(base, rel=1e-9)

    def test_law_monotone_response(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        base = statistic_law(small_dataset, frame, 0.6, 0.8).t_n
        moved = statistic_law(small_dataset.with_response(np.exp(small_dataset.y)), frame, 0.6, 0.8).t_n
        assert moved == base

    def test_permutation(self, small_dataset, rng):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        order = rng.permutation(small_dataset.n)
        shuffled = small_dataset.take(order)
        for stat in (statistic_mean, statistic_law):
            a = stat(small_dataset, frame, 0.6, 0.8).t_n
            b = stat(shuffled, frame, 0.6, 0.8).t_n
            assert b == pytest.approx(a, rel=1e-9)

    def test_complement_rotation(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        Z, W = project(small_dataset.X, frame)
        theta = 1.1
        Q = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        inner = mean_inner(small_dataset, frame, 0.6)
        a = quadratic_form(inner, Z, W, 0.8).t_n
        b = quadratic_form(inner, Z, W @ Q, 0.8).t_n
        assert b == pytest.approx(a, rel=1e-9)

    def test_sign_of_direction(self, small_dataset):
        # -beta is normalized back to beta, so the frame and statistic are unchanged
        a = statistic_mean(small_dataset, index_frame(normalize_direction([1.0, 0.5, -0.5])), 0.6, 0.8)
        b = statistic_mean(small_dataset, index_frame(normalize_direction([-1.0, -0.5, 0.5])), 0.6, 0.8)
        assert a.t_n == b.t_n


# ---------------------------------------------------------------------------
# Degenerate and diagnostic cases
# ---------------------------------------------------------------------------

class TestEdgeCases:
    def test_constant_response_is_degenerate(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.0, 0.0]))
        with pytest.raises(DegenerateStatisticError) as excinfo:
            statistic_mean(small_dataset.with_response(np.ones(small_dataset.n)), frame, 0.5, 0.5)
        assert excinfo.value.i_n == 0.0

    def test_law_never_degenerate_on_distinct_data(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.0, 0.0]))
        assert statistic_law(small_dataset, frame, 0.5, 0.5).v_n > 0

    def test_variance_positive(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 1.0, 1.0]))
        out = statistic_mean(small_dataset, frame, 0.5, 0.5)
        assert out.v_n > 0
        assert out.t_n == pytest.approx(out.i_n / out.v_n)
        assert 0.0 <= out.p_value <= 1.0

    def test_psd_diagnostic_nonnegative(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        Z, W = project(small_dataset.X, frame)
        for inner in (mean_inner(small_dataset, frame, 0.6), law_inner(small_dataset, frame, 0.6)):
            assert full_quadratic_psd_check(inner, Z, W, 0.7) >= -1e-9

    def test_law_inner_is_the_gram(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        Z, _ = project(small_dataset.X, frame)
        expected = law_gram(residual_field_law(compute_ranks(small_dataset.y), Z, 0.6))
        np.testing.assert_array_equal(law_inner(small_dataset, frame, 0.6), expected)

    def test_law_inner_fixed_cdf(self, small_dataset):
        frame = index_frame(normalize_direction([1.0, 0.5, -0.5]))
        Z, _ = project(small_dataset.X, frame)
        expected = law_gram(residual_field_law_fixed(small_dataset.y, Z, 0.6))
        np.testing.assert_array_equal(law_inner(small_dataset, frame, 0.6, fixed_cdf=True), expected)

    def test_pair_weights_zero_diagonal(self, rng):
        w = pair_weights(rng.standard_normal(5), rng.standard_normal((5, 2)), 0.5)
        assert np.all(np.diag(w) == 0.0)
        np.testing.assert_allclose(w, w.T)

    def test_bad_bandwidth(self, rng):
        with pytest.raises(DomainError):
            pair_weights(rng.standard_normal(5), rng.standard_normal((5, 1)), 0.0)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            pair_weights(rng.standard_normal(5), rng.standard_normal((4, 1)), 0.5)
