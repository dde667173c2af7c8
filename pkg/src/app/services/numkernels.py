"""
Dense numerical kernels: SVD, GSVD, eigenvalues and least squares.

Every kernel wraps scipy.linalg (LAPACK). LAPACK's own iteration limits play
the role of the sweep caps; a convergence failure surfaces as
``KernelFailureError`` and never as a partial result.
"""

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ..core.errors import (
    DegeneratePencilError,
    IllPosedSystemError,
    KernelFailureError,
    SizingError,
)
from ..core.logging import get_logger

logger = get_logger(__name__)

EPS = np.finfo(float).eps


@contextmanager
def _kernel(name: str) -> Iterator[None]:
    try:
        yield
    except (np.linalg.LinAlgError, ValueError) as exc:
        logger.error("Kernel failed", kernel=name, error=str(exc))
        raise KernelFailureError(f"{name} failed: {exc}") from exc


@dataclass(frozen=True, eq=False)
class GsvdFactors:
    """
    A = U [SigmaA; 0] X and B = V [SigmaB; 0] X.

    U, V are N x N unitary, SigmaA, SigmaB are M x M nonnegative diagonal
    matrices and X is M x M nonsingular.
    """

    U: np.ndarray
    V: np.ndarray
    SigmaA: np.ndarray
    SigmaB: np.ndarray
    X: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return np.diag(self.SigmaA)

    @property
    def beta(self) -> np.ndarray:
        return np.diag(self.SigmaB)

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        M = self.X.shape[0]
        A = self.U[:, :M] @ self.SigmaA @ self.X
        B = self.V[:, :M] @ self.SigmaB @ self.X
        return A, B


def svd(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``A = U diag(sigma) V^*`` with sigma nonincreasing."""
    matrix = np.asarray(A, dtype=complex)
    with _kernel("svd"):
        try:
            U, sigma, Vh = sla.svd(matrix, full_matrices=False)
        except np.linalg.LinAlgError:
            # gesdd occasionally stalls where the QR-iteration driver converges
            logger.debug("gesdd did not converge, retrying with gesvd")
            U, sigma, Vh = sla.svd(matrix, full_matrices=False, lapack_driver="gesvd")
    return U, sigma, Vh.conj().T


def singular_values(A: np.ndarray) -> np.ndarray:
    """Singular values of ``A`` in nonincreasing order."""
    with _kernel("svd"):
        return sla.svdvals(np.asarray(A, dtype=complex))


def gsvd(A: np.ndarray, B: np.ndarray) -> GsvdFactors:
    """
    Generalized SVD of two N x M matrices with N >= M.

    Built from a QR factorization of the stacked matrix [A; B] followed by a
    cosine-sine step: an SVD of the lower block of Q fixes V, SigmaB and the
    right rotation; a QR of the rotated upper block fixes U and SigmaA.

    Raises:
        SizingError: If shapes disagree or N < M
        DegeneratePencilError: If [A; B] is column-rank deficient
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise SizingError(f"GSVD needs equal shapes, got {A.shape} and {B.shape}")
    N, M = A.shape
    if N < M:
        raise SizingError(f"GSVD needs N >= M, got N={N}, M={M}")

    with _kernel("gsvd"):
        Q, R = sla.qr(np.vstack([A, B]), mode="economic")

    r_sigma = singular_values(R)
    if r_sigma[0] == 0 or r_sigma[-1] <= 2 * N * EPS * r_sigma[0]:
        rank = int(np.sum(r_sigma > 2 * N * EPS * r_sigma[0]))
        raise DegeneratePencilError(
            f"Stacked pencil matrix has numerical rank {rank} < {M}"
        )

    Q1, Q2 = Q[:N], Q[N:]
    with _kernel("gsvd"):
        V, beta, Wh = sla.svd(Q2, full_matrices=True)
        # columns of Q1 W are mutually orthogonal with norms sqrt(1 - beta^2)
        U, T = sla.qr(Q1 @ Wh.conj().T, mode="full")

    diagonal = np.diag(T)
    alpha = np.abs(diagonal)
    phases = np.ones(M, dtype=complex)
    nonzero = alpha > 0
    phases[nonzero] = diagonal[nonzero] / alpha[nonzero]
    U[:, :M] = U[:, :M] * phases[None, :]

    logger.debug(
        "GSVD computed",
        rows=N,
        cols=M,
        min_alpha=float(alpha.min()),
        min_beta=float(beta.min()),
    )

    return GsvdFactors(
        U=U,
        V=V,
        SigmaA=np.diag(alpha),
        SigmaB=np.diag(beta),
        X=Wh @ R,
    )


def eigenvalues(A: np.ndarray) -> np.ndarray:
    """All eigenvalues of a square complex matrix, with multiplicity."""
    with _kernel("eig"):
        return sla.eigvals(np.asarray(A, dtype=complex))


def generalized_eigenvalues(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Eigenvalues of the square pencil ``A - z B`` (QZ)."""
    with _kernel("eig"):
        return sla.eigvals(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Minimum of ||A x - b||_2 for a full column rank A with rows >= cols.

    Raises:
        SizingError: If A has fewer rows than columns
        IllPosedSystemError: If A is numerically rank deficient
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rows, cols = A.shape
    if rows < cols:
        raise SizingError(f"Least squares needs rows >= cols, got {rows} x {cols}")

    with _kernel("lstsq"):
        x, _, rank, _ = sla.lstsq(A, b, lapack_driver="gelsd")

    if rank < cols:
        raise IllPosedSystemError(
            f"Least-squares matrix has numerical rank {rank} < {cols}", rank=int(rank)
        )
    return x
