"""Monomial-exponential sums: definition, evaluation, sampling and noise."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import InvalidModelError
from ..core.logging import get_logger

logger = get_logger(__name__)

NOISE_MODEL = "uniform-complex"
# Zeros closer than this (relative) are one zero, e.g. f and f + 2*pi*i
ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class Term:
    """One term ``sum_s c_s x^s exp(f x)`` of the sum."""

    f: complex
    m: int
    coeffs: tuple[complex, ...]

    @property
    def z(self) -> complex:
        return complex(np.exp(self.f))

    def to_dict(self) -> dict:
        return {
            "f": [self.f.real, self.f.imag],
            "m": self.m,
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }


@dataclass(frozen=True)
class MonomialExponentialModel:
    """
    h(x) = sum_j sum_{s<m_j} c_{js} x^s exp(f_j x).

    Exponents are canonical; zeros ``z_j = exp(f_j)`` are derived.
    """

    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise InvalidModelError("Model needs at least one term")

        for index, term in enumerate(self.terms):
            if term.m < 1:
                raise InvalidModelError(
                    f"Term {index} has multiplicity {term.m}, expected >= 1"
                )
            if len(term.coeffs) != term.m:
                raise InvalidModelError(
                    f"Term {index} has {len(term.coeffs)} coefficients "
                    f"for multiplicity {term.m}"
                )
            if term.f == 0:
                raise InvalidModelError(f"Term {index} has a zero exponent")

        zeros = [term.z for term in self.terms]
        for i in range(len(zeros)):
            for j in range(i + 1, len(zeros)):
                if np.isclose(zeros[i], zeros[j], rtol=ZERO_RTOL, atol=0.0):
                    raise InvalidModelError(
                        f"Terms {i} and {j} share the zero {zeros[i]}"
                    )

    @property
    def order(self) -> int:
        """Total order M = sum of multiplicities."""
        return sum(term.m for term in self.terms)

    @property
    def exponents(self) -> np.ndarray:
        return np.array([term.f for term in self.terms], dtype=complex)

    @property
    def zeros(self) -> np.ndarray:
        return np.exp(self.exponents)

    @property
    def multiplicities(self) -> list[int]:
        return [term.m for term in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        """Flat coefficient vector in term order, degree within each term."""
        return np.array(
            [c for term in self.terms for c in term.coeffs], dtype=complex
        )

    def evaluate(self, x: complex | np.ndarray) -> complex | np.ndarray:
        """Evaluate the sum at a scalar or array of points."""
        points = np.asarray(x, dtype=complex)
        total = np.zeros_like(points)
        for term in self.terms:
            # numpy gives 0**0 == 1
            poly = sum(c * points**s for s, c in enumerate(term.coeffs))
            total = total + poly * np.exp(points * term.f)
        if total.ndim == 0:
            return complex(total)
        return total

    def scaled(self, alpha: complex) -> "MonomialExponentialModel":
        """Same exponents, every coefficient multiplied by ``alpha``."""
        return MonomialExponentialModel(
            terms=tuple(
                Term(f=t.f, m=t.m, coeffs=tuple(alpha * c for c in t.coeffs))
                for t in self.terms
            )
        )

    def to_dict(self) -> dict:
        return {"terms": [term.to_dict() for term in self.terms]}


@dataclass(frozen=True)
class SampleGrid:
    """Integer nodes k0, k0+1, ..., k0+count-1."""

    k0: int
    count: int
    step: int = 1

    def __post_init__(self) -> None:
        if self.count < 2:
            raise InvalidModelError(f"Sample grid needs >= 2 nodes, got {self.count}")
        if self.step != 1:
            raise InvalidModelError("Only unit grid steps are supported")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.k0, self.k0 + self.count)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Complex samples on a grid plus noise metadata."""

    grid: SampleGrid
    values: np.ndarray
    noise_sigma: float = 0.0
    seed: int | None = None
    noise_model: str | None = None
    model: MonomialExponentialModel | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise InvalidModelError(
                f"Expected {self.grid.count} samples, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return self.grid.count


def evaluate(model: MonomialExponentialModel, x: complex) -> complex:
    """Evaluate ``model`` at a single point."""
    return complex(model.evaluate(x))


def sample(model: MonomialExponentialModel, grid: SampleGrid) -> SampleSet:
    """Exact samples h(k0), ..., h(k0+count-1)."""
    values = model.evaluate(grid.nodes.astype(complex))
    return SampleSet(grid=grid, values=np.asarray(values), model=model)


def add_noise(samples: SampleSet, delta: float, seed: int) -> SampleSet:
    """
    White noise h(k) + delta * e_k with e_k = u + i v, u, v ~ U[0, 1].

    The same seed always gives the same perturbation.
    """
    if delta < 0:
        raise InvalidModelError(f"Noise amplitude must be >= 0, got {delta}")

    if delta == 0:
        values = samples.values.copy()
    else:
        rng = np.random.default_rng(seed)
        real = rng.uniform(0.0, 1.0, samples.count)
        imag = rng.uniform(0.0, 1.0, samples.count)
        values = samples.values + delta * (real + 1j * imag)

    logger.debug("Noise applied", delta=delta, seed=seed, count=samples.count)

    return SampleSet(
        grid=samples.grid,
        values=values,
        noise_sigma=float(delta),
        seed=seed,
        noise_model=NOISE_MODEL,
        model=samples.model,
    )


def from_exponents(
    exponents: Sequence[tuple[complex, int]], coeffs: Sequence[complex]
) -> MonomialExponentialModel:
    """Build a model from (f_j, m_j) pairs and a flat coefficient list."""
    expected = sum(m for _, m in exponents)
    if len(coeffs) != expected:
        raise InvalidModelError(
            f"Expected {expected} coefficients, got {len(coeffs)}"
        )

    terms = []
    offset = 0
    for f, m in exponents:
        terms.append(
            Term(
                f=complex(f),
                m=int(m),
                coeffs=tuple(complex(c) for c in coeffs[offset : offset + m]),
            )
        )
        offset += m
    return MonomialExponentialModel(terms=tuple(terms))


def from_zeros(
    zeros: Sequence[tuple[complex, int]], coeffs: Sequence[complex]
) -> MonomialExponentialModel:
    """Build a model from (z_j, m_j) pairs; f_j is the principal log of z_j."""
    values = [complex(z) for z, _ in zeros]
    for index, z in enumerate(values):
        if z == 0:
            raise InvalidModelError(f"Zero {index} is at the origin")
    if len(set(values)) != len(values):
        raise InvalidModelError("Zeros must be pairwise distinct")

    return from_exponents(
        [(complex(np.log(z)), m) for z, (_, m) in zip(values, zeros, strict=True)],
        coeffs,
    )
