"""Registry of the benchmark examples and the multisoliton Marchenko kernels."""

import math
from collections.abc import Sequence
from enum import Enum

import numpy as np

from ..core.config import settings
from ..core.errors import UnknownExampleError
from ..core.logging import get_logger
from ..services.estimator import casorati_matrix, solve_coefficients
from ..services.model import (
    MonomialExponentialModel,
    SampleSet,
    from_exponents,
    from_zeros,
)

logger = get_logger(__name__)


class ExampleId(str, Enum):
    """Registered examples."""

    EX1 = "ex1"
    EX2 = "ex2"
    EX3 = "ex3"
    EX4 = "ex4"
    EX5 = "ex5"
    EX6_R07 = "ex6_r07"
    EX6_R08 = "ex6_r08"
    EX6_R09 = "ex6_r09"
    EX6_UNION = "ex6_union"
    SOLITON_A = "soliton_a"
    SOLITON_B = "soliton_b"
    CUSTOM = "custom"


DEFAULT_B = 50.0
SOLITON_B = 5.0
CIRCLE_NODES = 40
CIRCLE_RADII = {
    ExampleId.EX6_R07: (0.7,),
    ExampleId.EX6_R08: (0.8,),
    ExampleId.EX6_R09: (0.9,),
    ExampleId.EX6_UNION: (0.7, 0.8, 0.9),
}

EX1_ZEROS = [
    0.9856 - 0.1628j,
    0.9856 + 0.1628j,
    0.8976 - 0.4305j,
    0.8976 + 0.4305j,
    0.8127 - 0.5690j,
    0.8127 + 0.5690j,
]
EX1_COEFFS = [1, 2, 3, 4, 5, 6]

# Examples 2-4 list 2e-5 * [...]; read as exponents these are damped sinusoids
SIGNAL_VECTOR = [
    2e-5 * (-208 - 2j * math.pi * 1379),
    2e-5 * (-256 - 2j * math.pi * 685),
    2e-5 * (-197 - 2j * math.pi * 271),
    2e-5 * (-117 + 2j * math.pi * 353),
    2e-5 * (-808 + 2j * math.pi * 478),
]
SIGNAL_COEFFS = [np.exp(15j) * c for c in (3.1, 9.9, 6.0, 2.8, 17.0)]

SIGNAL_LAYOUTS = {
    ExampleId.EX2: [(0, 1), (1, 1), (2, 1), (3, 1), (4, 1)],
    ExampleId.EX3: [(0, 2), (2, 1), (3, 1), (4, 1)],
    ExampleId.EX4: [(0, 2), (1, 2), (2, 1)],
}

SOLITON_CASES = {
    ExampleId.SOLITON_A: (
        [0.1 * (1 + 7j), 0.1 * (1.2 + 3j), 0.1 * (1.4 + 6j), 0.1 * (3 + 1.6j)],
        [1, 1, 1, 1],
    ),
    ExampleId.SOLITON_B: (
        [0.1 * (1 + 7j), 0.1 * (1.4 + 6j), 0.1 * (3 + 1.6j)],
        [2, 1, 1],
    ),
}
SOLITON_GAMMA = [1 + 1j, 2 + 1j, 3 + 1j, 4 + 1j]


def _kernel_coeffs(
    multiplicities: Sequence[int], gamma: Sequence[complex]
) -> list[complex]:
    coeffs = []
    offset = 0
    for m in multiplicities:
        coeffs.extend(gamma[offset + s] / math.factorial(s) for s in range(m))
        offset += m
    return coeffs


def marchenko_left(
    a: Sequence[complex], multiplicities: Sequence[int], gamma: Sequence[complex]
) -> MonomialExponentialModel:
    """Omega_l(x) = sum_j exp(-a_j x) sum_s Gamma_js x^s / s!."""
    return from_exponents(
        [(-complex(aj), m) for aj, m in zip(a, multiplicities, strict=True)],
        _kernel_coeffs(multiplicities, gamma),
    )


def marchenko_right(
    a: Sequence[complex], multiplicities: Sequence[int], gamma: Sequence[complex]
) -> MonomialExponentialModel:
    """Omega_r(x) = sum_j exp(a_j x) sum_s Gamma_js x^s / s!."""
    return from_exponents(
        [(complex(aj), m) for aj, m in zip(a, multiplicities, strict=True)],
        _kernel_coeffs(multiplicities, gamma),
    )


def recover_gamma_r(
    a: Sequence[tuple[complex, int]], omega_r_samples: SampleSet
) -> np.ndarray:
    """
    Least-squares (Gamma_r)_js from samples of Omega_r on negative nodes.

    ``a`` holds (a_j, m_j) pairs, usually from a prior estimate of Omega_l
    (a_j = -f_j). The basis is exp(a_j k) k^s / s!.
    """
    nodes = omega_r_samples.grid.nodes
    if np.any(nodes >= 0):
        logger.warning("Omega_r samples include nonnegative nodes", k0=int(nodes[0]))

    K = casorati_matrix([(np.exp(complex(aj)), m) for aj, m in a], nodes)
    scale = np.array(
        [1.0 / math.factorial(s) for _, m in a for s in range(m)], dtype=float
    )
    gamma = solve_coefficients(K * scale[None, :], omega_r_samples.values)

    logger.debug(
        "Gamma_r recovered",
        terms=len(a),
        residual=float(
            np.linalg.norm((K * scale[None, :]) @ gamma - omega_r_samples.values)
        ),
    )
    return gamma


def _circle_zeros(radii: Sequence[float]) -> list[complex]:
    angles = 2 * np.pi * np.arange(CIRCLE_NODES) / CIRCLE_NODES
    return [complex(r * np.exp(1j * t)) for r in radii for t in angles]


def generate_example(
    example_id: ExampleId | str,
    seed: int = 0,
    interpretation: str | None = None,
) -> tuple[MonomialExponentialModel, float]:
    """
    Ground-truth model and e(h) domain bound ``b`` for a registered example.

    Args:
        example_id: Registered id
        seed: Seeds the uniform [0, 1] coefficients of the circle examples
        interpretation: ``exponent`` (default) or ``zero`` reading of the
            listed vectors of Examples 2-4

    Raises:
        UnknownExampleError: If the id is not registered
    """
    try:
        key = ExampleId(example_id)
    except ValueError as exc:
        raise UnknownExampleError(f"Unknown example id: {example_id}") from exc
    interpretation = interpretation or settings.exponent_interpretation

    if key == ExampleId.EX1:
        return from_zeros([(z, 1) for z in EX1_ZEROS], EX1_COEFFS), DEFAULT_B

    if key == ExampleId.EX5:
        zeros = [(EX1_ZEROS[0], 2), (EX1_ZEROS[2], 2), (EX1_ZEROS[4], 1), (EX1_ZEROS[5], 1)]
        return from_zeros(zeros, EX1_COEFFS), DEFAULT_B

    if key in SIGNAL_LAYOUTS:
        layout = [(SIGNAL_VECTOR[i], m) for i, m in SIGNAL_LAYOUTS[key]]
        if interpretation == "zero":
            return from_zeros(layout, SIGNAL_COEFFS), DEFAULT_B
        return from_exponents(layout, SIGNAL_COEFFS), DEFAULT_B

    if key in CIRCLE_RADII:
        zeros = _circle_zeros(CIRCLE_RADII[key])
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(0.0, 1.0, len(zeros))
        return from_zeros([(z, 1) for z in zeros], list(coeffs)), DEFAULT_B

    if key in SOLITON_CASES:
        a, multiplicities = SOLITON_CASES[key]
        return marchenko_left(a, multiplicities, SOLITON_GAMMA), SOLITON_B

    raise UnknownExampleError(f"Example {key.value} has no built-in model")
