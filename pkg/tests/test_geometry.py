"""Tests for direction normalization and complement construction."""

import math

import numpy as np
import pytest

from core.errors import DegenerateDirectionError, DimensionError, DomainError, IdentificationError
from core.geometry import complement_basis, index_frame, normalize_direction, orthogonality_error, project
from core.models import Direction


# ---------------------------------------------------------------------------
# normalize_direction
# ---------------------------------------------------------------------------

class TestNormalizeDirection:
    def test_unit_norm_and_positive_first(self):
        d = normalize_direction([-3.0, 4.0])
        np.testing.assert_allclose(d.beta, [0.6, -0.8])

    def test_zero_vector(self):
        with pytest.raises(DegenerateDirectionError):
            normalize_direction([0.0, 0.0, 0.0])

    def test_zero_first_component(self):
        with pytest.raises(IdentificationError):
            normalize_direction([0.0, 1.0])

    def test_non_finite(self):
        with pytest.raises(DegenerateDirectionError):
            normalize_direction([math.nan, 1.0])

    def test_scale_invariant(self):
        a = normalize_direction([1.0, 2.0, -2.0]).beta
        b = normalize_direction([-5.0, -10.0, 10.0]).beta
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_direction_is_read_only(self):
        d = normalize_direction([1.0, 1.0])
        with pytest.raises(ValueError):
            d.beta[0] = 2.0

    def test_direction_rejects_non_unit(self):
        with pytest.raises(DomainError):
            Direction(beta=np.array([1.0, 1.0]))


# ---------------------------------------------------------------------------
# complement_basis / index_frame
# ---------------------------------------------------------------------------

class TestComplement:
    def test_orthonormal_over_random_directions(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 7))
            v = rng.standard_normal(p)
            frame = index_frame(normalize_direction(v))
            assert orthogonality_error(frame) < 1e-12

    def test_shape(self):
        basis = complement_basis(normalize_direction([1.0, 2.0, 3.0, 4.0]))
        assert basis.shape == (4, 3)

    def test_deterministic(self):
        d = normalize_direction([0.3, -0.2, 0.9])
        np.testing.assert_array_equal(complement_basis(d), complement_basis(d))

    def test_p_equals_two(self):
        frame = index_frame(normalize_direction([1.0, 1.0]))
        np.testing.assert_allclose(np.abs(frame.complement[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_parallel_to_second_axis_uses_fallback(self):
        d = normalize_direction([1e-9, 1.0, 0.0])
        frame = index_frame(d)
        assert frame.fallback_used
        assert orthogonality_error(frame) < 1e-12

    def test_first_axis_needs_no_fallback(self):
        frame = index_frame(normalize_direction([1.0, 0.0, 0.0]))
        assert not frame.fallback_used
        np.testing.assert_allclose(frame.complement, [[0, 0], [1, 0], [0, 1]], atol=1e-15)


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------

class TestProject:
    def test_projection_preserves_norms(self, rng):
        X = rng.standard_normal((9, 3))
        Z, W = project(X, index_frame(normalize_direction([1.0, -1.0, 0.5])))
        np.testing.assert_allclose(Z ** 2 + np.sum(W ** 2, axis=1), np.sum(X ** 2, axis=1), atol=1e-12)

    def test_dimension_mismatch(self, rng):
        frame = index_frame(normalize_direction([1.0, 1.0]))
        with pytest.raises(DimensionError):
            project(rng.standard_normal((5, 3)), frame)
