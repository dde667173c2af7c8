"""Experiment runner: single rows, table presets, CSV/JSON emission."""

import csv
import io
import json
import math
import statistics
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.optimize import linear_sum_assignment

from ..core.config import Settings, settings
from ..core.errors import InputFormatError, PencilError, UnknownExampleError
from ..core.logging import get_logger
from ..services.estimator import EstimatorOptions, RecoveredModel, estimate
from ..services.hankel import RankPolicy
from ..services.metrics import ErrorReport, evaluate_errors
from ..services.model import (
    MonomialExponentialModel,
    SampleGrid,
    SampleSet,
    add_noise,
    sample,
)
from .examples import (
    SOLITON_CASES,
    SOLITON_GAMMA,
    ExampleId,
    generate_example,
    marchenko_right,
    recover_gamma_r,
)

logger = get_logger(__name__)

CSV_COLUMNS = ["example", "N", "delta", "Mhat", "e_f", "e_c", "e_h", "estimated_M", "status"]


class ExperimentConfig(BaseModel):
    """One experiment: which example, how many samples, how much noise."""

    example_id: ExampleId
    N: int = Field(ge=1)
    delta: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0)
    Mhat: int | None = Field(default=None, description="None selects the auto policy")
    b: float | None = Field(default=None, gt=0, description="None uses the example's b")
    k0: int = Field(default=0, ge=0)
    output: Path | None = None
    output_format: Literal["csv", "json"] = "csv"
    interpretation: Literal["exponent", "zero"] | None = None

    @field_validator("Mhat", mode="before")
    @classmethod
    def _parse_auto(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in ("auto", ""):
            return None
        return value

    @model_validator(mode="after")
    def _check_sizes(self) -> "ExperimentConfig":
        if self.Mhat is not None and not 1 <= self.Mhat <= self.N:
            raise ValueError(f"Mhat={self.Mhat} must satisfy 1 <= Mhat <= N={self.N}")
        return self


@dataclass
class TableRow:
    """One line of an error table."""

    example: str
    N: int
    delta: float
    Mhat_used: int
    e_f: float = math.nan
    e_c: float = math.nan
    e_h: float = math.nan
    estimated_M: int | None = None
    runtime: float = 0.0
    status: str = "ok"
    failure: str | None = None
    seed: int = 0
    multiplicities: list[int] = field(default_factory=list)
    report: ErrorReport | None = None
    extras: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] | None = None

    def csv_values(self, float_format: str, include_timings: bool = False) -> list[str]:
        values = [
            self.example,
            str(self.N),
            float_format % self.delta,
            str(self.Mhat_used),
            float_format % self.e_f,
            float_format % self.e_c,
            float_format % self.e_h,
            "" if self.estimated_M is None else str(self.estimated_M),
            self.status,
        ]
        if include_timings:
            values.append(f"{self.runtime:.3f}")
        return values

    def to_dict(self, include_timings: bool = False) -> dict:
        """Convert to dictionary for JSON serialization."""
        data = {
            "example": self.example,
            "N": self.N,
            "delta": self.delta,
            "Mhat": self.Mhat_used,
            "e_f": self.e_f,
            "e_c": self.e_c,
            "e_h": self.e_h,
            "estimated_M": self.estimated_M,
            "status": self.status,
            "failure": self.failure,
            "seed": self.seed,
            "multiplicities": list(self.multiplicities),
            "report": self.report.to_dict() if self.report else None,
            "extras": self.extras,
            "diagnostics": self.diagnostics,
        }
        if include_timings:
            data["runtime"] = self.runtime
        return data


@dataclass(frozen=True)
class RowSpec:
    """A table row before a seed is attached."""

    example_id: ExampleId
    N: int
    delta: float = 0.0
    Mhat: int | None = None
    k0: int = 0


@dataclass(frozen=True)
class TablePreset:
    title: str
    rows: tuple[RowSpec, ...]
    node_plot: bool = False


def _sweep(
    example_id: ExampleId,
    sizes: Sequence[int],
    delta: float = 0.0,
    mhat: dict[int, int] | None = None,
    k0: int = 0,
) -> tuple[RowSpec, ...]:
    mhat = mhat or {}
    return tuple(RowSpec(example_id, n, delta, mhat.get(n), k0) for n in sizes)


def _soliton_rows(example_id: ExampleId) -> tuple[RowSpec, ...]:
    sizes = (4, 8, 16, 32, 64)
    mhat = {n: (n if n == 4 else 7) for n in sizes}
    return tuple(
        row
        for delta in (0.0, 1e-9, 1e-7)
        for row in _sweep(example_id, sizes, delta, mhat, k0=1)
    )


EX1_SIZES = (6, 12, 24, 36, 48)
SIGNAL_SIZES = (5, 10, 15, 20, 50)
NOISE = 1e-9
CIRCLES = (ExampleId.EX6_R07, ExampleId.EX6_R08, ExampleId.EX6_R09)
# (N, Mhat) rows for comparison with other Prony-type solvers
COMPARE_SIZES = ((6, 6), (7, 7), (12, 8))

TABLE_PRESETS: dict[str, TablePreset] = {
    "table1": TablePreset("Example 1, exact data", _sweep(ExampleId.EX1, EX1_SIZES)),
    "table2": TablePreset(
        "Example 1, noisy data", _sweep(ExampleId.EX1, EX1_SIZES, NOISE)
    ),
    "table3": TablePreset("Example 2, exact data", _sweep(ExampleId.EX2, SIGNAL_SIZES)),
    "table4": TablePreset(
        "Example 2, noisy data", _sweep(ExampleId.EX2, SIGNAL_SIZES, NOISE)
    ),
    "table5": TablePreset("Example 3, exact data", _sweep(ExampleId.EX3, SIGNAL_SIZES)),
    "table6": TablePreset(
        "Example 3, noisy data", _sweep(ExampleId.EX3, SIGNAL_SIZES, NOISE)
    ),
    "table7": TablePreset("Example 4, exact data", _sweep(ExampleId.EX4, SIGNAL_SIZES)),
    "table8": TablePreset(
        "Example 4, noisy data", _sweep(ExampleId.EX4, SIGNAL_SIZES, NOISE)
    ),
    "table9": TablePreset(
        "Example 5, exact and noisy data",
        _sweep(ExampleId.EX5, EX1_SIZES) + _sweep(ExampleId.EX5, EX1_SIZES, NOISE),
    ),
    "table10": TablePreset(
        "Example 6, radius sweep, exact data",
        tuple(RowSpec(ex, 40, 0.0, 40) for ex in CIRCLES),
        node_plot=True,
    ),
    "table11": TablePreset(
        "Multisoliton case (a)", _soliton_rows(ExampleId.SOLITON_A)
    ),
    "table12": TablePreset(
        "Multisoliton case (b)", _soliton_rows(ExampleId.SOLITON_B)
    ),
    "table10_noisy": TablePreset(
        "Example 6, radius sweep, noisy data",
        tuple(RowSpec(ex, 40, 1e-11, 40) for ex in CIRCLES),
        node_plot=True,
    ),
    "ex6_union": TablePreset(
        "Example 6, three circles together",
        (RowSpec(ExampleId.EX6_UNION, 120, 0.0, 120),),
        node_plot=True,
    ),
    "table1_compare": TablePreset(
        "Example 1, exact data, small windows",
        tuple(RowSpec(ExampleId.EX1, n, 0.0, mhat) for n, mhat in COMPARE_SIZES),
    ),
}
DEFAULT_TABLES = [f"table{i}" for i in range(1, 13)]


def derive_seeds(seed: int) -> tuple[int, int]:
    """Independent (model, noise) seeds from one experiment seed."""
    model_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    return int(model_seq.generate_state(1)[0]), int(noise_seq.generate_state(1)[0])


def row_seed(seed: int, index: int) -> int:
    """Per-row seed derived from (table seed, row index)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def node_plot_data(
    truth: MonomialExponentialModel,
    recovered: RecoveredModel | None,
    matching: Sequence[tuple[int, int]] | None = None,
) -> list[tuple[float, float, float, float]]:
    """
    Rows (true re, true im, recovered re, recovered im) in truth order.

    ``matching`` holds (estimated term, true term) pairs as in
    ``ErrorReport.matching``. Without one, terms are paired by a minimum
    total distance assignment that ignores multiplicities. Unpaired zeros
    get NaN on the missing side; unpaired recovered zeros come last.
    """
    nan = complex(math.nan, math.nan)
    true_zeros = truth.zeros
    found = recovered.model.zeros if recovered is not None else np.array([], dtype=complex)
    if matching is None and len(found) and len(true_zeros):
        cost = np.abs(found[:, None] - true_zeros[None, :])
        est_idx, true_idx = linear_sum_assignment(cost)
        matching = list(zip(est_idx.tolist(), true_idx.tolist(), strict=True))
    partner = {j: i for i, j in matching or []}

    rows = []
    for j, t in enumerate(true_zeros):
        r = found[partner[j]] if j in partner else nan
        rows.append((t.real, t.imag, r.real, r.imag))
    for i in sorted(set(range(len(found))) - set(partner.values())):
        rows.append((math.nan, math.nan, found[i].real, found[i].imag))
    return rows


@dataclass
class ExperimentOutcome:
    row: TableRow
    truth: MonomialExponentialModel
    recovered: RecoveredModel | None


class ExperimentRunner:
    """Runs experiments and tables with settings-driven defaults."""

    def __init__(self, config: Settings | None = None):
        self.settings = config or settings
        self.mhat_cap = self.settings.mhat_cap
        self.cluster_tol = self.settings.cluster_tol
        self.workers = self.settings.workers

        logger.info(
            "ExperimentRunner initialized",
            mhat_cap=self.mhat_cap,
            cluster_tol=self.cluster_tol,
            workers=self.workers,
        )

    def resolve_mhat(self, config: ExperimentConfig) -> int:
        """Explicit Mhat, or min(cap, N)."""
        if config.Mhat is not None:
            return config.Mhat
        return min(self.mhat_cap, config.N)

    def options_for(self, delta: float) -> EstimatorOptions:
        return EstimatorOptions(
            cluster_tol=self.cluster_tol,
            rank_policy=RankPolicy(
                noise_delta=delta, factor=self.settings.noise_floor_factor
            ),
            use_all_samples=self.settings.use_all_samples,
            sigma_floor=self.settings.sigma_floor,
            pencil_form=self.settings.pencil_form,
            truncation=self.settings.truncation,
            cluster_noise_factor=self.settings.cluster_noise_factor,
            cluster_tol_max=self.settings.cluster_tol_max,
            rescale_exact=self.settings.rescale_exact,
        )

    def run_outcome(self, config: ExperimentConfig) -> ExperimentOutcome:
        """Like ``run_experiment`` but also returns truth and estimate."""
        model_seed, noise_seed = derive_seeds(config.seed)
        truth, default_b = generate_example(
            config.example_id, seed=model_seed, interpretation=config.interpretation
        )
        b = config.b or default_b
        mhat = self.resolve_mhat(config)
        row = TableRow(
            example=config.example_id.value,
            N=config.N,
            delta=config.delta,
            Mhat_used=mhat,
            seed=config.seed,
        )

        samples = sample(truth, SampleGrid(k0=config.k0, count=2 * config.N))
        if config.delta > 0:
            samples = add_noise(samples, config.delta, noise_seed)

        started = time.perf_counter()
        recovered = None
        try:
            recovered = estimate(samples, mhat, self.options_for(config.delta))
        except PencilError as exc:
            row.status = "failed"
            row.failure = str(exc)
            logger.warning(
                "Experiment row failed",
                example=row.example,
                N=config.N,
                delta=config.delta,
                failure=row.failure,
            )
        row.runtime = time.perf_counter() - started

        if recovered is not None:
            report = evaluate_errors(recovered, truth, b)
            row.e_f, row.e_c, row.e_h = report.e_f, report.e_c, report.e_h
            row.estimated_M = recovered.estimated_M
            row.multiplicities = recovered.model.multiplicities
            row.report = report
            row.diagnostics = recovered.to_dict()
            if report.structural_mismatch:
                row.status = "mismatch"
            if config.example_id in SOLITON_CASES:
                row.extras["e_gamma_r"] = self._gamma_r_error(
                    config, recovered, report.matching, noise_seed
                )

        logger.info(
            "Experiment row finished",
            example=row.example,
            N=row.N,
            delta=row.delta,
            Mhat=row.Mhat_used,
            e_f=row.e_f,
            e_c=row.e_c,
            e_h=row.e_h,
            status=row.status,
            runtime=row.runtime,
        )
        return ExperimentOutcome(row=row, truth=truth, recovered=recovered)

    def run_experiment(self, config: ExperimentConfig) -> TableRow:
        """Sample, perturb, estimate and score one configuration."""
        return self.run_outcome(config).row

    def _gamma_r_error(
        self,
        config: ExperimentConfig,
        recovered: RecoveredModel,
        matching: list[tuple[int, int]] | None,
        noise_seed: int,
    ) -> float:
        """Relative error of Gamma_r fitted to Omega_r samples on -2N..-1."""
        if matching is None:
            return math.inf
        a, multiplicities = SOLITON_CASES[config.example_id]
        omega_r = marchenko_right(a, multiplicities, SOLITON_GAMMA)
        samples = sample(omega_r, SampleGrid(k0=-2 * config.N, count=2 * config.N))
        if config.delta > 0:
            samples = add_noise(samples, config.delta, noise_seed + 1)

        terms = recovered.model.terms
        try:
            gamma = recover_gamma_r([(-t.f, t.m) for t in terms], samples)
        except PencilError as exc:
            logger.warning("Gamma_r recovery failed", error=str(exc))
            return math.inf

        # matching pairs estimated term i with true term j of Omega_l
        true_offsets = np.cumsum([0, *multiplicities])
        est_offsets = np.cumsum([0, *(t.m for t in terms)])
        worst = 0.0
        for i, j in matching:
            for s in range(multiplicities[j]):
                target = SOLITON_GAMMA[true_offsets[j] + s]
                worst = max(worst, abs(1 - gamma[est_offsets[i] + s] / target))
        return float(worst)

    def reproduce_table(
        self, table_id: str, row_specs: Sequence[RowSpec] | None = None, seed: int = 0
    ) -> list[ExperimentOutcome]:
        """One run per row spec, each row seeded from (seed, row index)."""
        if row_specs is None:
            if table_id not in TABLE_PRESETS:
                raise UnknownExampleError(f"Unknown table id: {table_id}")
            row_specs = TABLE_PRESETS[table_id].rows
        if not row_specs:
            raise ValueError("A table needs at least one row spec")

        configs = [
            ExperimentConfig(
                example_id=spec.example_id,
                N=spec.N,
                delta=spec.delta,
                Mhat=spec.Mhat,
                k0=spec.k0,
                seed=row_seed(seed, index),
            )
            for index, spec in enumerate(row_specs)
        ]

        logger.info("Reproducing table", table=table_id, rows=len(configs), seed=seed)
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(self.run_outcome, configs))
        return [self.run_outcome(config) for config in configs]

    def noisy_band(
        self, config: ExperimentConfig, seeds: Sequence[int] = tuple(range(10))
    ) -> TableRow:
        """Median errors of ``config`` over several seeds."""
        rows = [self.run_experiment(config.model_copy(update={"seed": s})) for s in seeds]
        median = replace(
            rows[0], report=None, diagnostics=None, extras={"seeds": list(seeds)}
        )
        for name in ("e_f", "e_c", "e_h"):
            setattr(median, name, statistics.median(getattr(r, name) for r in rows))
        median.runtime = sum(r.runtime for r in rows)
        failed = sum(r.status != "ok" for r in rows)
        median.status = "ok" if failed == 0 else f"{failed}/{len(rows)} not ok"
        return median


def format_table_csv(
    rows: Sequence[TableRow], float_format: str, include_timings: bool = False
) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (["runtime"] if include_timings else []))
    for row in rows:
        writer.writerow(row.csv_values(float_format, include_timings))
    return buffer.getvalue()


def format_table_json(
    table_id: str, seed: int, rows: Sequence[TableRow], include_timings: bool = False
) -> str:
    payload = {
        "table": table_id,
        "title": TABLE_PRESETS[table_id].title if table_id in TABLE_PRESETS else table_id,
        "seed": seed,
        "rows": [row.to_dict(include_timings) for row in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_table(
    table_id: str,
    outcomes: Sequence[ExperimentOutcome],
    out_dir: Path,
    seed: int,
    float_format: str = settings.csv_float_format,
    include_timings: bool = False,
) -> list[Path]:
    """Write ``<table>.csv``, ``<table>.json`` and, for node presets, nodes CSV."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [outcome.row for outcome in outcomes]
    written = []

    csv_path = out_dir / f"{table_id}.csv"
    csv_path.write_text(format_table_csv(rows, float_format, include_timings))
    written.append(csv_path)

    json_path = out_dir / f"{table_id}.json"
    json_path.write_text(format_table_json(table_id, seed, rows, include_timings))
    written.append(json_path)

    preset = TABLE_PRESETS.get(table_id)
    if preset is not None and preset.node_plot:
        nodes_path = out_dir / f"{table_id}_nodes.csv"
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["example", "true_re", "true_im", "recovered_re", "recovered_im"])
        for outcome in outcomes:
            report = outcome.row.report
            matching = report.matching if report is not None else None
            for values in node_plot_data(outcome.truth, outcome.recovered, matching):
                writer.writerow([outcome.row.example] + [repr(float(v)) for v in values])
        nodes_path.write_text(buffer.getvalue())
        written.append(nodes_path)

    logger.info("Table written", table=table_id, files=[str(p) for p in written])
    return written


def reproduce_all(
    seed: int,
    out_dir: Path,
    runner: ExperimentRunner | None = None,
    table_ids: Sequence[str] = DEFAULT_TABLES,
    include_timings: bool = False,
) -> list[Path]:
    """Run and write every requested preset."""
    runner = runner or ExperimentRunner()
    written: list[Path] = []
    for table_id in table_ids:
        outcomes = runner.reproduce_table(table_id, seed=seed)
        written.extend(
            write_table(
                table_id,
                outcomes,
                out_dir,
                seed,
                runner.settings.csv_float_format,
                include_timings,
            )
        )
    return written


def read_samples_csv(path: Path, k0: int = 0) -> SampleSet:
    """
    Load samples written one per line as ``re,im`` (or just ``re``).

    Blank lines and lines starting with ``#`` are skipped.

    Raises:
        InputFormatError: On unreadable files, malformed lines or too few samples
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"Cannot read samples from {path}: {exc}") from exc

    values: list[complex] = []
    for lineno, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
            continue
        if len(fields) > 2:
            raise InputFormatError(f"{path}:{lineno}: expected 're,im', got {fields}")
        try:
            parts = [float(item) for item in fields]
        except ValueError as exc:
            raise InputFormatError(f"{path}:{lineno}: {exc}") from exc
        values.append(complex(parts[0], parts[1] if len(parts) == 2 else 0.0))

    if len(values) < 2:
        raise InputFormatError(f"{path}: need at least 2 samples, found {len(values)}")
    logger.debug("Samples loaded", path=str(path), count=len(values), k0=k0)
    return SampleSet(grid=SampleGrid(k0=k0, count=len(values)), values=np.asarray(values))


def write_samples_csv(samples: SampleSet, path: Path) -> Path:
    """Write samples as ``re,im`` lines with full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for value in samples.values:
        writer.writerow([repr(float(value.real)), repr(float(value.imag))])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buffer.getvalue())
    logger.info("Samples written", path=str(path), count=samples.count)
    return path
