"""Tests for Hankel pairs, rank estimation and the Prony companion."""

import numpy as np
import pytest

from src.app.core.errors import OrderZeroError, SizingError
from src.app.services.hankel import (
    RankPolicy,
    build_hankel_pair,
    companion_matrix,
    estimate_order,
    prony_coefficients,
)
from src.app.services.model import SampleGrid, SampleSet, from_zeros
from src.app.services.numkernels import EPS

from .conftest import random_coefficients, random_zero_layout


def samples_of(values):
    return SampleSet(grid=SampleGrid(k0=0, count=len(values)), values=np.asarray(values))


class TestBuildHankelPair:
    """Test cases for Hankel pair assembly."""

    def test_two_by_two(self):
        """Entries a..d land on the anti-diagonals."""
        a, b, c, d = 1.0, 2.0, 3.0, 4.0
        pair = build_hankel_pair(samples_of([a, b, c, d]), N=2, Mhat=2)
        np.testing.assert_array_equal(pair.H0, [[a, b], [b, c]])
        np.testing.assert_array_equal(pair.H1, [[b, c], [c, d]])

    def test_shift_structure(self):
        """Column j + 1 of H0 is column j of H1."""
        pair = build_hankel_pair(samples_of(np.arange(5) + 1j), N=3, Mhat=2)
        np.testing.assert_array_equal(pair.H0[:, 1], pair.H1[:, 0])
        assert pair.H0.shape == (3, 2)

    def test_entries_follow_index_sum(self):
        """H0[i, j] = h(i + j) and H1[i, j] = h(i + j + 1)."""
        values = np.arange(12) * (1 + 2j)
        pair = build_hankel_pair(samples_of(values), N=6, Mhat=4)
        for i in range(6):
            for j in range(4):
                assert pair.H0[i, j] == values[i + j]
                assert pair.H1[i, j] == values[i + j + 1]

    def test_example1_rank(self, ex1_model, exact_samples):
        """Six simple zeros give a rank-6 window."""
        pair = build_hankel_pair(exact_samples(ex1_model, 12), N=6, Mhat=6)
        assert np.linalg.matrix_rank(pair.H0) == 6

    def test_insufficient_samples_names_required_count(self):
        """The error names the needed and the available counts."""
        with pytest.raises(SizingError, match="needs 7 samples, got 6"):
            build_hankel_pair(samples_of(np.ones(6)), N=4, Mhat=3)

    def test_mhat_above_n(self):
        with pytest.raises(SizingError, match="N >= Mhat"):
            build_hankel_pair(samples_of(np.ones(10)), N=2, Mhat=3)

    def test_truncated_keeps_leading_columns(self, ex1_model, exact_samples):
        """Truncation is a plain column slice."""
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        small = pair.truncated(6)
        assert small.H0.shape == (12, 6)
        np.testing.assert_array_equal(small.H1, pair.H1[:, :6])

    def test_truncated_bounds(self, ex1_model, exact_samples):
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        with pytest.raises(SizingError):
            pair.truncated(11)

    def test_projected_rows_are_orthonormal(self, ex1_model, exact_samples):
        """H0 and H1 of the projection are one orthonormal basis minus a row."""
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        small = pair.projected(6)
        assert small.H0.shape == (12, 6)
        assert small.Mhat == 6
        basis = np.vstack([small.H0, small.H1[-1:]])
        np.testing.assert_allclose(basis.conj().T @ basis, np.eye(6), atol=1e-12)
        np.testing.assert_array_equal(small.H0[1:], small.H1[:-1])

    def test_projected_spans_window_columns(self, ex1_model, exact_samples):
        """For exact data the basis spans the columns of [H0; last row of H1]."""
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        window = np.vstack([pair.H0, pair.H1[-1:]])
        small = pair.projected(6)
        basis = np.vstack([small.H0, small.H1[-1:]])
        residual = window - basis @ (basis.conj().T @ window)
        assert np.linalg.norm(residual) <= 1e-12 * np.linalg.norm(window)

    def test_projected_bounds(self, ex1_model, exact_samples):
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        with pytest.raises(SizingError, match="project"):
            pair.projected(0)


class TestEstimateOrder:
    """Test cases for numerical rank estimation."""

    def test_two_term_model(self, two_three_model, exact_samples):
        """2^k + 3^k has order 2."""
        pair = build_hankel_pair(exact_samples(two_three_model, 12), N=6, Mhat=4)
        assert estimate_order(pair.H0) == 2

    def test_zero_matrix(self):
        """A zero window has no order."""
        with pytest.raises(OrderZeroError, match="indistinguishable from noise"):
            estimate_order(np.zeros((4, 3)))

    def test_example1(self, ex1_model, exact_samples):
        """Example 1 has order 6 under the machine threshold."""
        pair = build_hankel_pair(exact_samples(ex1_model, 24), N=12, Mhat=10)
        assert estimate_order(pair.H0) == 6

    def test_noise_floor_hides_small_signal(self):
        """A signal below the noise floor is reported as order zero."""
        model = from_zeros([(0.5, 1)], [1e-12])
        samples = samples_of(model.evaluate(np.arange(8)))
        pair = build_hankel_pair(samples, N=4, Mhat=4)
        with pytest.raises(OrderZeroError):
            estimate_order(pair.H0, RankPolicy(noise_delta=1e-9))

    def test_machine_threshold(self):
        """Exact data use max(rows, cols) * eps * sigma_max."""
        policy = RankPolicy()
        assert policy.is_exact
        assert policy.threshold(2.0, (10, 4)) == pytest.approx(10 * EPS * 2.0)

    def test_noise_threshold(self):
        """Noise floor = factor * delta * sqrt(rows * cols)."""
        policy = RankPolicy(noise_delta=1e-9, factor=10.0)
        assert not policy.is_exact
        assert policy.threshold(1.0, (16, 4)) == pytest.approx(10 * 1e-9 * 8)

    def test_explicit_floor_wins(self):
        """An explicit floor overrides the noise level."""
        policy = RankPolicy(noise_delta=1e-9, noise_floor=1e-3)
        assert policy.threshold(1.0, (4, 4)) == 1e-3

    @pytest.mark.slow
    def test_exact_order_on_random_models(self):
        """Exact data always gives the true order."""
        rng = np.random.default_rng(6)
        for _ in range(200):
            layout = random_zero_layout(rng)
            M = sum(m for _, m in layout)
            N = max(2 * M, M + 4)
            model = from_zeros(layout, random_coefficients(rng, M))
            pair = build_hankel_pair(samples_of(model.evaluate(np.arange(2 * N))), N, M + 4)
            assert estimate_order(pair.H0) == M


class TestPronyCompanion:
    """Test cases for the Prony polynomial and its companion matrix."""

    def test_expansion_of_two_roots(self):
        """(z - 2)(z - 3) = 6 - 5z + z^2."""
        np.testing.assert_allclose(prony_coefficients([(2, 1), (3, 1)]), [6, -5, 1])

    def test_multiplicity_repeats_factor(self):
        """(z - 2)^2 = 4 - 4z + z^2."""
        np.testing.assert_allclose(prony_coefficients([(2, 2)]), [4, -4, 1])

    def test_companion_shape(self):
        """Ones on the subdiagonal, -p in the last column."""
        C = companion_matrix(np.array([6, -5, 1]))
        np.testing.assert_allclose(C, [[0, -6], [1, 5]])

    def test_shift_identity(self, exact_samples):
        """H1 = H0 C on the first M columns for exact data."""
        layout = [(0.9 * np.exp(0.4j), 2), (1.05 * np.exp(-1.3j), 1), (0.95, 1)]
        model = from_zeros(layout, [1, 0.5j, 2, -1])
        pair = build_hankel_pair(exact_samples(model, 16), N=8, Mhat=4)
        C = companion_matrix(prony_coefficients(layout))
        np.testing.assert_allclose(pair.H0 @ C, pair.H1, atol=1e-12)
