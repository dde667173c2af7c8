"""Tests for the example registry and the Marchenko kernels."""

import math

import numpy as np
import pytest

from src.app.core.errors import UnknownExampleError
from src.app.pipelines.examples import (
    CIRCLE_NODES,
    DEFAULT_B,
    SIGNAL_VECTOR,
    SOLITON_B,
    SOLITON_CASES,
    SOLITON_GAMMA,
    ExampleId,
    generate_example,
    marchenko_left,
    marchenko_right,
    recover_gamma_r,
)
from src.app.services.estimator import estimate
from src.app.services.metrics import match_parameters
from src.app.services.model import SampleGrid, from_exponents, sample


class TestGenerateExample:
    """Test cases for the registered ground-truth models."""

    def test_example1(self):
        """Six simple zeros with c = 1..6."""
        model, b = generate_example(ExampleId.EX1)
        assert len(model.terms) == 6
        assert model.multiplicities == [1] * 6
        np.testing.assert_allclose(model.coefficients, [1, 2, 3, 4, 5, 6])
        assert b == DEFAULT_B

    def test_accepts_plain_strings(self):
        """Ids may be given as strings."""
        model, _ = generate_example("ex1")
        assert model.order == 6

    def test_signal_examples_read_vectors_as_exponents(self):
        """Examples 2-4 read the listed vector as exponents by default."""
        model, _ = generate_example(ExampleId.EX2)
        np.testing.assert_allclose(model.exponents, SIGNAL_VECTOR)
        np.testing.assert_allclose(np.abs(model.coefficients), [3.1, 9.9, 6.0, 2.8, 17])

    def test_zero_interpretation(self):
        """The literal reading puts the zeros at the listed (tiny) values."""
        model, _ = generate_example(ExampleId.EX2, interpretation="zero")
        np.testing.assert_allclose(model.zeros, SIGNAL_VECTOR, rtol=1e-14)

    @pytest.mark.parametrize(
        "example_id, multiplicities",
        [
            (ExampleId.EX3, [2, 1, 1, 1]),
            (ExampleId.EX4, [2, 2, 1]),
            (ExampleId.EX5, [2, 2, 1, 1]),
        ],
    )
    def test_multiple_zero_layouts(self, example_id, multiplicities):
        """Multiplicity layouts of Examples 3-5."""
        model, _ = generate_example(example_id)
        assert model.multiplicities == multiplicities

    def test_circle_nodes(self):
        """40 equispaced nodes on the circle, real coefficients in [0, 1]."""
        model, _ = generate_example(ExampleId.EX6_R07, seed=3)
        j = np.arange(CIRCLE_NODES)
        np.testing.assert_allclose(model.zeros, 0.7 * np.exp(2j * np.pi * j / 40), atol=1e-15)
        coeffs = model.coefficients
        assert np.all((coeffs.real >= 0) & (coeffs.real <= 1))
        np.testing.assert_array_equal(coeffs.imag, 0)

    def test_circle_coefficients_follow_seed(self):
        """Coefficients repeat with the seed and change with it."""
        first, _ = generate_example(ExampleId.EX6_R08, seed=1)
        again, _ = generate_example(ExampleId.EX6_R08, seed=1)
        other, _ = generate_example(ExampleId.EX6_R08, seed=2)
        np.testing.assert_array_equal(first.coefficients, again.coefficients)
        assert not np.array_equal(first.coefficients, other.coefficients)

    def test_union_of_circles(self):
        """All three radii together give 120 nodes."""
        model, _ = generate_example(ExampleId.EX6_UNION)
        assert model.order == 3 * CIRCLE_NODES
        radii = sorted(set(np.round(np.abs(model.zeros), 12)))
        assert radii == [0.7, 0.8, 0.9]

    def test_soliton_b(self):
        """Case (b) has a double bound state."""
        model, b = generate_example(ExampleId.SOLITON_B)
        a, _ = SOLITON_CASES[ExampleId.SOLITON_B]
        assert model.multiplicities == [2, 1, 1]
        np.testing.assert_allclose(model.exponents, [-x for x in a])
        # c_js = Gamma_js / s!
        np.testing.assert_allclose(
            model.coefficients, [1 + 1j, (2 + 1j) / 1, 3 + 1j, 4 + 1j]
        )
        assert b == SOLITON_B

    def test_unknown_id(self):
        """Unregistered ids raise."""
        with pytest.raises(UnknownExampleError, match="Unknown example id"):
            generate_example("ex99")

    def test_custom_has_no_builtin_model(self):
        """The custom id is only for sample files."""
        with pytest.raises(UnknownExampleError, match="no built-in model"):
            generate_example(ExampleId.CUSTOM)


class TestMarchenkoKernels:
    """Test cases for the kernel generators and Gamma_r recovery."""

    def test_left_and_right_mirror_exponents(self):
        """Omega_l and Omega_r have opposite exponents."""
        a = [0.1 + 0.7j, 0.3 + 0.16j]
        left = marchenko_left(a, [1, 1], [1, 2])
        right = marchenko_right(a, [1, 1], [1, 2])
        np.testing.assert_allclose(left.exponents, -right.exponents)

    def test_factorial_scaling(self):
        """Gamma_s is divided by s!."""
        kernel = marchenko_right([0.5], [3], [1, 2, 6])
        np.testing.assert_allclose(kernel.coefficients, [1, 2, 3])

    def test_single_term_gamma(self):
        """exp(k) at k = -2, -1 gives Gamma = [1]."""
        omega_r = marchenko_right([1.0], [1], [1.0])
        samples = sample(omega_r, SampleGrid(k0=-2, count=2))
        np.testing.assert_allclose(samples.values, np.exp([-2, -1]))
        gamma = recover_gamma_r([(1.0, 1)], samples)
        np.testing.assert_allclose(gamma, [1], rtol=1e-14)

    def test_case_a_exact(self):
        """Gamma_r is recovered from exact Omega_r samples."""
        a, multiplicities = SOLITON_CASES[ExampleId.SOLITON_A]
        N = 16
        omega_r = marchenko_right(a, multiplicities, SOLITON_GAMMA)
        samples = sample(omega_r, SampleGrid(k0=-2 * N, count=2 * N))
        gamma = recover_gamma_r(list(zip(a, multiplicities, strict=True)), samples)
        np.testing.assert_allclose(gamma, SOLITON_GAMMA, rtol=1e-10)

    def test_case_b_from_left_estimate(self):
        """Estimate Omega_l first, then fit Gamma_r with the recovered a."""
        a, multiplicities = SOLITON_CASES[ExampleId.SOLITON_B]
        N = 16
        omega_l, _ = generate_example(ExampleId.SOLITON_B)
        recovered = estimate(sample(omega_l, SampleGrid(k0=1, count=2 * N)), Mhat=7)
        matching = match_parameters(recovered, omega_l)
        assert matching is not None

        omega_r = marchenko_right(a, multiplicities, SOLITON_GAMMA)
        samples = sample(omega_r, SampleGrid(k0=-2 * N, count=2 * N))
        terms = recovered.model.terms
        gamma = recover_gamma_r([(-t.f, t.m) for t in terms], samples)

        est_offsets = np.cumsum([0, *(t.m for t in terms)])
        true_offsets = np.cumsum([0, *multiplicities])
        for i, j in matching:
            for s in range(multiplicities[j]):
                target = SOLITON_GAMMA[true_offsets[j] + s]
                assert abs(1 - gamma[est_offsets[i] + s] / target) <= 1e-4

    def test_nonnegative_nodes_still_solve(self):
        """A warning is logged but the solve goes ahead."""
        kernel = from_exponents([(0.2, 1)], [2.0])
        samples = sample(kernel, SampleGrid(k0=0, count=3))
        np.testing.assert_allclose(recover_gamma_r([(0.2, 1)], samples), [2.0])

    def test_b_values(self):
        """Each example carries its evaluation interval."""
        _, b = generate_example(ExampleId.SOLITON_A)
        assert b == 5
        assert math.isclose(generate_example(ExampleId.EX5)[1], 50)
