"""Relative error estimates e(f), e(c), e(h) against a ground-truth model."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core.errors import MetricUndefinedError
from ..core.logging import get_logger
from .estimator import RecoveredModel
from .model import MonomialExponentialModel

logger = get_logger(__name__)

GRID_POINTS = 50

Matching = list[tuple[int, int]]


@dataclass
class ErrorReport:
    """Relative errors plus the estimated -> true term matching behind them."""

    e_f: float
    e_c: float
    e_h: float
    matching: Matching | None
    b: float
    structural_mismatch: bool = False
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "e_f": self.e_f,
            "e_c": self.e_c,
            "e_h": self.e_h,
            "matching": [list(pair) for pair in self.matching or []],
            "b": self.b,
            "structural_mismatch": self.structural_mismatch,
            "diagnostics": list(self.diagnostics),
        }


def _as_model(
    estimated: RecoveredModel | MonomialExponentialModel,
) -> MonomialExponentialModel:
    if isinstance(estimated, RecoveredModel):
        return estimated.model
    return estimated


def match_parameters(
    estimated: RecoveredModel | MonomialExponentialModel,
    truth: MonomialExponentialModel,
) -> Matching | None:
    """
    Minimum total |z_est - z_true| bijection between equal-multiplicity terms.

    Returns None when term counts or multiplicity multisets differ.
    """
    model = _as_model(estimated)
    est_m, true_m = model.multiplicities, truth.multiplicities
    if sorted(est_m) != sorted(true_m):
        logger.warning(
            "Structural mismatch between estimate and truth",
            estimated=est_m,
            truth=true_m,
        )
        return None

    cost = np.abs(model.zeros[:, None] - truth.zeros[None, :])
    cost[np.asarray(est_m)[:, None] != np.asarray(true_m)[None, :]] = np.inf
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols, strict=True)]


def error_f(
    estimated: RecoveredModel | MonomialExponentialModel,
    truth: MonomialExponentialModel,
    matching: Matching | None,
) -> float:
    """max_j |1 - f_j / f_j*| after moving f_j to the branch nearest f_j*."""
    if matching is None:
        return math.inf
    model = _as_model(estimated)
    worst = 0.0
    for i, j in matching:
        f, target = model.terms[i].f, truth.terms[j].f
        shift = round((target.imag - f.imag) / (2 * math.pi))
        f = f + 2j * math.pi * shift
        worst = max(worst, abs(1 - f / target))
    return worst


def error_c(
    estimated: RecoveredModel | MonomialExponentialModel,
    truth: MonomialExponentialModel,
    matching: Matching | None,
) -> float:
    """
    max_{j,s} |1 - c_js / c_js*| over matched terms.

    Raises:
        MetricUndefinedError: If a true coefficient is zero
    """
    if matching is None:
        return math.inf
    model = _as_model(estimated)
    worst = 0.0
    for i, j in matching:
        for s, (c, target) in enumerate(
            zip(model.terms[i].coeffs, truth.terms[j].coeffs, strict=True)
        ):
            if target == 0:
                raise MetricUndefinedError(
                    f"True coefficient c[{j},{s}] is zero; e(c) is not applicable"
                )
            worst = max(worst, abs(1 - c / target))
    return worst


def error_h(
    estimated: RecoveredModel | MonomialExponentialModel,
    truth: MonomialExponentialModel,
    b: float,
) -> float:
    """max over x_i = i b / 50, i = 1..50, of |1 - h(x_i) / h*(x_i)|."""
    x = np.arange(1, GRID_POINTS + 1) * (b / GRID_POINTS)
    h_true = np.asarray(truth.evaluate(x))
    h_est = np.asarray(_as_model(estimated).evaluate(x))

    usable = h_true != 0
    if not usable.all():
        logger.warning(
            "Excluding grid points where the true sum vanishes",
            points=[float(p) for p in x[~usable]],
        )
    if not usable.any():
        return math.nan
    # difference first: identical sums score exactly 0
    gap = np.abs(h_est[usable] - h_true[usable]) / np.abs(h_true[usable])
    return float(np.max(gap))


def evaluate_errors(
    estimated: RecoveredModel | MonomialExponentialModel,
    truth: MonomialExponentialModel,
    b: float,
) -> ErrorReport:
    """All three errors; mismatches and undefined metrics become diagnostics."""
    diagnostics: list[str] = []
    matching = match_parameters(estimated, truth)
    if matching is None:
        diagnostics.append(
            "structural mismatch: multiplicities "
            f"{_as_model(estimated).multiplicities} vs {truth.multiplicities}"
        )

    try:
        e_c = error_c(estimated, truth, matching)
    except MetricUndefinedError as exc:
        diagnostics.append(str(exc))
        e_c = math.nan

    return ErrorReport(
        e_f=error_f(estimated, truth, matching),
        e_c=e_c,
        e_h=error_h(estimated, truth, b),
        matching=matching,
        b=b,
        structural_mismatch=matching is None,
        diagnostics=diagnostics,
    )
