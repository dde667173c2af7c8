"""Shifted Hankel pairs, numerical rank estimation and the Prony companion."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ..core.config import settings
from ..core.errors import OrderZeroError, SizingError
from ..core.logging import get_logger
from .model import SampleSet
from .numkernels import EPS, singular_values, svd

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class HankelPair:
    """H0[i, j] = h(k0 + i + j) and H1[i, j] = h(k0 + 1 + i + j)."""

    H0: np.ndarray
    H1: np.ndarray
    N: int
    Mhat: int
    k0: int

    def truncated(self, M: int) -> "HankelPair":
        """Keep the first ``M`` columns of both matrices."""
        if not 1 <= M <= self.Mhat:
            raise SizingError(f"Cannot truncate {self.Mhat} columns to {M}")
        return HankelPair(
            H0=self.H0[:, :M], H1=self.H1[:, :M], N=self.N, Mhat=M, k0=self.k0
        )

    def projected(self, M: int) -> "HankelPair":
        """
        Compress both matrices onto the leading rank-M subspace of the window.

        The stacked (N + 1) x Mhat window [H0; last row of H1] is factored by
        SVD. Right-multiplying by V_M Sigma_M^{-1} turns H0 into its first M
        left singular vectors without the last row and H1 into the same
        vectors without the first row. Exact data keep the pencil eigenvalues;
        noise outside the leading subspace drops out.
        """
        if not 1 <= M <= self.Mhat:
            raise SizingError(f"Cannot project {self.Mhat} columns onto {M}")
        window = np.vstack([self.H0, self.H1[-1:]])
        U, _, _ = svd(window)
        lead = U[:, :M]
        return HankelPair(H0=lead[:-1], H1=lead[1:], N=self.N, Mhat=M, k0=self.k0)


@dataclass(frozen=True)
class RankPolicy:
    """
    Threshold for counting significant singular values.

    Exact data uses ``max(rows, cols) * eps * sigma_max``. With a noise level
    ``noise_delta`` the floor becomes ``factor * delta * sqrt(rows * cols)``;
    an explicit ``noise_floor`` overrides both.
    """

    noise_delta: float = 0.0
    noise_floor: float | None = None
    factor: float = settings.noise_floor_factor

    @property
    def is_exact(self) -> bool:
        return self.noise_floor is None and self.noise_delta == 0

    def with_noise(self, delta: float) -> "RankPolicy":
        return RankPolicy(noise_delta=delta, noise_floor=self.noise_floor, factor=self.factor)

    def threshold(self, sigma_max: float, shape: tuple[int, int]) -> float:
        rows, cols = shape
        machine = max(rows, cols) * EPS * sigma_max
        if self.noise_floor is not None:
            return max(machine, self.noise_floor)
        if self.noise_delta > 0:
            return max(machine, self.factor * self.noise_delta * np.sqrt(rows * cols))
        return machine


def build_hankel_pair(samples: SampleSet, N: int, Mhat: int) -> HankelPair:
    """
    Assemble the N x Mhat Hankel windows starting at k0 and k0 + 1.

    Raises:
        SizingError: If N < Mhat, Mhat < 1 or fewer than N + Mhat samples exist
    """
    if Mhat < 1 or N < Mhat:
        raise SizingError(f"Need N >= Mhat >= 1, got N={N}, Mhat={Mhat}")
    required = N + Mhat
    if samples.count < required:
        raise SizingError(
            f"Hankel pair {N}x{Mhat} needs {required} samples, got {samples.count}"
        )

    h = samples.values
    H0 = sla.hankel(h[:N], h[N - 1 : N + Mhat - 1])
    H1 = sla.hankel(h[1 : N + 1], h[N : N + Mhat])

    return HankelPair(H0=H0, H1=H1, N=N, Mhat=Mhat, k0=samples.grid.k0)


def order_from_spectrum(
    sigma: np.ndarray, shape: tuple[int, int], policy: RankPolicy
) -> int:
    """Count singular values above the policy threshold."""
    sigma_max = float(sigma[0]) if len(sigma) else 0.0
    threshold = policy.threshold(sigma_max, shape)
    order = int(np.sum(sigma > threshold))
    if sigma_max == 0 or order == 0:
        raise OrderZeroError(
            f"No singular value exceeds the threshold {threshold:.3e}; "
            "signal is indistinguishable from noise"
        )

    logger.debug(
        "Order estimated",
        order=order,
        threshold=threshold,
        sigma_max=sigma_max,
        shape=shape,
    )
    return order


def estimate_order(H: np.ndarray, policy: RankPolicy | None = None) -> int:
    """Numerical rank of ``H`` under ``policy``."""
    matrix = np.asarray(H, dtype=complex)
    return order_from_spectrum(
        singular_values(matrix), matrix.shape, policy or RankPolicy()
    )


def prony_coefficients(zeros: Sequence[tuple[complex, int]]) -> np.ndarray:
    """
    Coefficients p_0, ..., p_M of prod_j (z - z_j)^{m_j}, with p_M = 1.

    Expanded factor by factor rather than from computed roots.
    """
    highest_first = np.array([1.0 + 0j])
    for z, m in zeros:
        for _ in range(m):
            highest_first = np.convolve(highest_first, np.array([1.0, -complex(z)]))
    return highest_first[::-1].copy()


def companion_matrix(p: np.ndarray) -> np.ndarray:
    """
    C_M(P) with ones on the subdiagonal and -p_0..-p_{M-1} in the last
    column, so that H1 = H0 C_M(P) on the first M columns.
    """
    p = np.asarray(p, dtype=complex)
    M = len(p) - 1
    C = np.eye(M, k=-1, dtype=complex)
    C[:, -1] = -p[:M] / p[M]
    return C
