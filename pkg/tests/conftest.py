"""Test configuration and fixtures for PencilProny."""

import numpy as np
import pytest


@pytest.fixture
def ex1_model():
    """Example 1 ground truth: six simple zeros, coefficients 1..6."""
    from src.app.pipelines.examples import ExampleId, generate_example

    model, _ = generate_example(ExampleId.EX1)
    return model


@pytest.fixture
def two_three_model():
    """h(k) = 2^k + 3^k."""
    from src.app.services.model import from_zeros

    return from_zeros([(2.0, 1), (3.0, 1)], [1.0, 1.0])


@pytest.fixture
def exact_samples():
    """Factory: exact samples of a model on 0..count-1."""
    from src.app.services.model import SampleGrid, sample

    def _make(model, count, k0=0):
        return sample(model, SampleGrid(k0=k0, count=count))

    return _make


@pytest.fixture
def runner():
    """Experiment runner with default settings."""
    from src.app.pipelines.run import ExperimentRunner

    return ExperimentRunner()


def random_zero_layout(rng, max_order=8, max_mult=3, radii=(0.8, 1.1)):
    """
    Well separated zeros with multiplicities, total order <= max_order.

    Angles are stratified over the circle so distinct zeros never collide.
    """
    layout = []
    order = 0
    target = int(rng.integers(1, max_order + 1))
    while order < target:
        m = int(rng.integers(1, min(max_mult, target - order) + 1))
        layout.append(m)
        order += m

    n = len(layout)
    offset = rng.uniform(0, 2 * np.pi)
    angles = offset + 2 * np.pi * (np.arange(n) + rng.uniform(0.25, 0.75, n)) / n
    radius = rng.uniform(radii[0], radii[1], n)
    zeros = radius * np.exp(1j * angles)
    return [(complex(z), m) for z, m in zip(zeros, layout, strict=True)]


def random_coefficients(rng, count):
    """Complex coefficients with modulus in [0.5, 2]."""
    modulus = rng.uniform(0.5, 2.0, count)
    phase = rng.uniform(0, 2 * np.pi, count)
    return list(modulus * np.exp(1j * phase))
