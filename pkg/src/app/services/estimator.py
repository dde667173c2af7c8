"""Matrix-pencil estimator: GSVD pencil eigenvalues, clustering, coefficients."""

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.config import settings
from ..core.errors import (
    DegenerateZeroError,
    PencilError,
    SingularPencilError,
    SizingError,
)
from ..core.logging import get_logger
from .hankel import HankelPair, RankPolicy, build_hankel_pair, order_from_spectrum
from .model import MonomialExponentialModel, SampleSet, from_exponents
from .numkernels import (
    eigenvalues,
    generalized_eigenvalues,
    gsvd,
    lstsq,
    singular_values,
)

logger = get_logger(__name__)

MIN_ZERO_MODULUS = 1e-12
# Energy ratio between sample halves above which exact data are rescaled
DECAY_RESCALE_RATIO = 1e3
TRUNCATIONS = ("auto", "columns", "subspace")


@dataclass(frozen=True)
class EstimatorOptions:
    """Tunable knobs of the pipeline; defaults come from settings."""

    cluster_tol: float = settings.cluster_tol
    rank_policy: RankPolicy = field(default_factory=RankPolicy)
    use_all_samples: bool = settings.use_all_samples
    sigma_floor: float = settings.sigma_floor
    pencil_form: str = settings.pencil_form
    truncation: str = settings.truncation
    cluster_noise_factor: float = settings.cluster_noise_factor
    cluster_tol_max: float = settings.cluster_tol_max
    rescale_exact: bool = settings.rescale_exact

    def __post_init__(self) -> None:
        if self.cluster_tol <= 0 or self.sigma_floor <= 0:
            raise ValueError("Estimator tolerances must be positive")
        if self.cluster_noise_factor <= 0 or self.cluster_tol_max <= 0:
            raise ValueError("Noisy clustering radius settings must be positive")
        if self.pencil_form not in ("reduced", "premultiplied"):
            raise ValueError(f"Unknown pencil form: {self.pencil_form}")
        if self.truncation not in TRUNCATIONS:
            raise ValueError(f"Unknown truncation: {self.truncation}")


@dataclass(frozen=True)
class Cluster:
    """A group of pencil eigenvalues taken as one zero of multiplicity m."""

    center: complex
    multiplicity: int
    members: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "multiplicity": self.multiplicity,
            "members": list(self.members),
        }


@dataclass(eq=False)
class RecoveredModel:
    """Estimator output plus the diagnostics of each stage."""

    model: MonomialExponentialModel
    estimated_M: int
    raw_eigenvalues: np.ndarray
    clusters: list[Cluster]
    fit_residual: float
    order_spectrum: np.ndarray
    N: int
    Mhat: int
    truncation: str = "columns"
    cluster_radius: float = settings.cluster_tol
    decay_rate: float = 1.0

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "model": self.model.to_dict(),
            "estimated_M": self.estimated_M,
            "raw_eigenvalues": [[z.real, z.imag] for z in self.raw_eigenvalues],
            "clusters": [cluster.to_dict() for cluster in self.clusters],
            "fit_residual": self.fit_residual,
            "order_spectrum": [float(s) for s in self.order_spectrum],
            "N": self.N,
            "Mhat": self.Mhat,
            "truncation": self.truncation,
            "cluster_radius": self.cluster_radius,
            "decay_rate": self.decay_rate,
        }


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except PencilError as exc:
        logger.error("Estimation stage failed", stage=name, error=str(exc))
        raise exc.with_stage(name)


def pencil_eigenvalues(
    pair: HankelPair,
    sigma_floor: float = settings.sigma_floor,
    form: str = "reduced",
) -> np.ndarray:
    """
    The M generalized eigenvalues of (H0^* H1, H0^* H0).

    The reduced form takes the GSVD H1 = U [Sa; 0] X, H0 = V [Sb; 0] X and
    returns the eigenvalues of Sb^{-1} V_NM^* U_NM Sa. The premultiplied form
    hands the explicit M x M pencil to QZ.

    Raises:
        SingularPencilError: If a diagonal entry of Sb is below
            ``sigma_floor`` times the largest one
    """
    M = pair.Mhat
    if form == "premultiplied":
        H0h = pair.H0.conj().T
        return generalized_eigenvalues(H0h @ pair.H1, H0h @ pair.H0)

    with _stage("gsvd"):
        factors = gsvd(pair.H1, pair.H0)
    alpha, beta = factors.alpha, factors.beta
    if beta.min() < sigma_floor * beta.max():
        raise SingularPencilError(
            f"Sigma^k0 diagonal {beta.min():.3e} is below "
            f"{sigma_floor:.1e} x {beta.max():.3e}"
        )

    coupling = factors.V[:, :M].conj().T @ factors.U[:, :M]
    reduced = (coupling * alpha[None, :]) / beta[:, None]
    return eigenvalues(reduced)


def cluster_multiplicities(eigs: Sequence[complex], tol: float) -> list[Cluster]:
    """
    Single-linkage grouping under |a - b| <= tol * max(1, |a|, |b|).

    Centers are member means. Clusters come sorted by descending
    multiplicity, then ascending principal argument of the center.
    """
    values = np.asarray(eigs, dtype=complex)
    if values.size == 0:
        raise ValueError("Cannot cluster an empty eigenvalue list")
    if tol <= 0:
        raise ValueError(f"Cluster tolerance must be positive, got {tol}")

    parent = list(range(len(values)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            a, b = values[i], values[j]
            if abs(a - b) <= tol * max(1.0, abs(a), abs(b)):
                parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)

    clusters = [
        Cluster(
            center=complex(values[members].mean()),
            multiplicity=len(members),
            members=tuple(members),
        )
        for members in groups.values()
    ]
    clusters.sort(key=lambda c: (-c.multiplicity, float(np.angle(c.center))))
    return clusters


def recover_exponents(clusters: Sequence[Cluster]) -> list[tuple[complex, int]]:
    """f_j = principal log of each cluster center."""
    result = []
    for cluster in clusters:
        if abs(cluster.center) < MIN_ZERO_MODULUS:
            raise DegenerateZeroError(
                f"Cluster center {cluster.center} is too close to the origin"
            )
        result.append((complex(np.log(cluster.center)), cluster.multiplicity))
    return result


def casorati_matrix(
    terms: Sequence[tuple[complex, int]], points: Sequence[int]
) -> np.ndarray:
    """
    Columns k^s z_j^k, s = 0..m_j-1, per term in order (0^0 = 1).

    For simple zeros this is the Vandermonde matrix [z_j^k].
    """
    k = np.asarray(points)
    if len(np.unique(k)) != len(k):
        raise SizingError("Casorati points must be distinct")
    order = sum(m for _, m in terms)
    if order > len(k):
        raise SizingError(f"Casorati matrix needs >= {order} points, got {len(k)}")

    columns = []
    for z, m in terms:
        powers = np.power(complex(z), k)
        for s in range(m):
            columns.append(k.astype(float) ** s * powers)
    return np.column_stack(columns)


def solve_coefficients(K: np.ndarray, h: Sequence[complex]) -> np.ndarray:
    """Least-squares coefficients c, ordered like the Casorati columns."""
    values = np.asarray(h, dtype=complex)
    if len(values) != K.shape[0]:
        raise SizingError(f"Expected {K.shape[0]} samples, got {len(values)}")
    return lstsq(K, values)




def decay_log_rate(values: Sequence[complex]) -> float:
    """
    log(rho) with E_second / E_first = rho^(2N) over the two sample halves.

    Returns 0 when the halves carry energies within ``DECAY_RESCALE_RATIO``
    of each other or either half vanishes.
    """
    h = np.asarray(values, dtype=complex)
    N = len(h) // 2
    if N == 0:
        return 0.0
    first = float(np.sum(np.abs(h[:N]) ** 2))
    second = float(np.sum(np.abs(h[N : 2 * N]) ** 2))
    if not (first > 0 and second > 0 and np.isfinite(first) and np.isfinite(second)):
        return 0.0
    log_ratio = np.log(second) - np.log(first)
    if abs(log_ratio) < np.log(DECAY_RESCALE_RATIO):
        return 0.0
    return float(0.5 * log_ratio / N)


def rescale_samples(samples: SampleSet, log_rate: float) -> SampleSet:
    """g(k) = h(k) rho^{-k}: zeros divide by rho, coefficients are unchanged."""
    weights = np.exp(-log_rate * samples.grid.nodes)
    return replace(samples, values=samples.values * weights)


def noisy_cluster_radius(
    spectrum: np.ndarray, M: int, threshold: float, opts: EstimatorOptions
) -> float:
    """
    Clustering radius widened for noise.

    A zero of multiplicity m splits by about eps^(1/m) under a relative
    perturbation eps = threshold / sigma_M. The radius follows the double-zero
    case, clamped to [cluster_tol, cluster_tol_max].
    """
    sigma_M = float(spectrum[M - 1])
    if sigma_M <= 0:
        return opts.cluster_tol_max
    spread = opts.cluster_noise_factor * float(np.sqrt(threshold / sigma_M))
    return max(opts.cluster_tol, min(spread, opts.cluster_tol_max))


def estimate(
    samples: SampleSet, Mhat: int, opts: EstimatorOptions | None = None
) -> RecoveredModel:
    """
    Recover a monomial-exponential model from 2N samples.

    Stages: Hankel pair, order, truncation, GSVD pencil, clustering,
    exponents, Casorati least squares. A failure is re-raised with the stage
    name attached.

    Noisy data reduce the pencil onto its leading rank-M subspace and cluster
    with a radius that grows with the noise. Exact data whose two halves
    differ in energy by more than ``DECAY_RESCALE_RATIO`` are first rescaled
    so the zeros sit near the unit circle; results are mapped back.
    """
    opts = opts or EstimatorOptions()
    if samples.count % 2:
        raise SizingError(
            f"Estimation needs an even sample count 2N, got {samples.count}",
            stage="hankel",
        )
    if samples.grid.k0 < 0:
        raise SizingError("Estimation needs a nonnegative start index", stage="hankel")
    N = samples.count // 2

    policy = opts.rank_policy
    if policy.is_exact and samples.noise_sigma > 0:
        policy = policy.with_noise(samples.noise_sigma)
    noisy = not policy.is_exact

    truncation = opts.truncation
    if truncation == "auto":
        truncation = "subspace" if noisy else "columns"

    log_rate = 0.0
    if opts.rescale_exact and not noisy:
        log_rate = decay_log_rate(samples.values)
    work = rescale_samples(samples, log_rate) if log_rate else samples
    growth = float(np.exp(log_rate))

    logger.info(
        "Estimation started",
        N=N,
        Mhat=Mhat,
        k0=samples.grid.k0,
        truncation=truncation,
        decay_rate=growth,
    )

    with _stage("hankel"):
        pair = build_hankel_pair(work, N, Mhat)

    with _stage("order"):
        spectrum = singular_values(pair.H0)
        M = order_from_spectrum(spectrum, pair.H0.shape, policy)

    with _stage("pencil"):
        reduced = pair.projected(M) if truncation == "subspace" else pair.truncated(M)
        scaled_eigs = pencil_eigenvalues(reduced, opts.sigma_floor, opts.pencil_form)

    radius = opts.cluster_tol
    if noisy:
        threshold = policy.threshold(float(spectrum[0]), pair.H0.shape)
        radius = noisy_cluster_radius(spectrum, M, threshold, opts)

    with _stage("cluster"):
        scaled_clusters = cluster_multiplicities(scaled_eigs, radius)
        clusters = [replace(c, center=c.center * growth) for c in scaled_clusters]

    with _stage("exponents"):
        exponents = recover_exponents(clusters)

    nodes = samples.grid.nodes
    count = len(nodes) if opts.use_all_samples else M
    with _stage("casorati"):
        K = casorati_matrix(
            [(c.center, c.multiplicity) for c in scaled_clusters], nodes[:count]
        )

    with _stage("coefficients"):
        g = work.values[:count]
        coeffs = solve_coefficients(K, g)
        # residual rows back on the original scale
        weights = np.exp(log_rate * nodes[:count]) if log_rate else 1.0
        residual = float(np.linalg.norm((K @ coeffs - g) * weights))
        model = from_exponents(exponents, list(coeffs))

    logger.info(
        "Estimation finished",
        estimated_M=M,
        terms=len(clusters),
        multiplicities=[c.multiplicity for c in clusters],
        cluster_radius=radius,
        fit_residual=residual,
    )

    return RecoveredModel(
        model=model,
        estimated_M=M,
        raw_eigenvalues=np.asarray(scaled_eigs) * growth,
        clusters=clusters,
        fit_residual=residual,
        order_spectrum=spectrum,
        N=N,
        Mhat=Mhat,
        truncation=truncation,
        cluster_radius=radius,
        decay_rate=growth,
    )
