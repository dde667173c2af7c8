"""Command line interface for PencilProny."""

import csv
import io
import json
import sys
from pathlib import Path
from typing import Any

import click
from click.core import ParameterSource
from dotenv import dotenv_values
from pydantic import ValidationError

from ..core.config import settings
from ..core.errors import InputFormatError, PencilError
from ..core.logging import get_logger
from ..services.estimator import EstimatorOptions, RecoveredModel, estimate
from ..services.hankel import RankPolicy
from ..services.model import SampleGrid, add_noise, sample
from .examples import ExampleId, generate_example
from .run import (
    DEFAULT_TABLES,
    TABLE_PRESETS,
    ExperimentConfig,
    ExperimentRunner,
    derive_seeds,
    read_samples_csv,
    reproduce_all,
    write_samples_csv,
)

logger = get_logger(__name__)

EXIT_ESTIMATION = 2
EXIT_INPUT = 3

# config file keys that differ from the click parameter names
CONFIG_ALIASES = {
    "format": "output_format",
    "output": "out",
    "input": "input_path",
    "example": "example_id",
}


def _fail(message: str, code: int) -> None:
    click.echo(f"Error: {message}", err=True)
    sys.exit(code)


def _apply_config_file(ctx: click.Context, config: Path | None) -> None:
    """Fill parameters left at their defaults from a flat key=value file."""
    if config is None:
        return
    try:
        values = dotenv_values(config)
    except (OSError, UnicodeDecodeError) as exc:
        raise InputFormatError(f"Cannot read config {config}: {exc}") from exc

    params = {param.name.lower(): param for param in ctx.command.params}
    for key, raw in values.items():
        lookup = key.strip().lower().replace("-", "_")
        param = params.get(CONFIG_ALIASES.get(lookup, lookup))
        if param is None or param.name == "config":
            logger.warning("Ignoring unknown config key", key=key, file=str(config))
            continue
        name = param.name
        if raw is None or ctx.get_parameter_source(name) != ParameterSource.DEFAULT:
            continue
        try:
            ctx.params[name] = param.type_cast_value(ctx, raw)
        except click.BadParameter as exc:
            raise InputFormatError(f"{config}: bad value for {key}: {exc}") from exc


def _parse_mhat(value: str) -> int | None:
    if value.strip().lower() == "auto":
        return None
    try:
        return int(value)
    except ValueError as exc:
        raise InputFormatError(f"--mhat must be an integer or 'auto', got {value!r}") from exc


def _format_recovered(recovered: RecoveredModel, output_format: str) -> str:
    if output_format == "json":
        return json.dumps(recovered.to_dict(), indent=2, sort_keys=True) + "\n"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["term", "m", "s", "f_re", "f_im", "z_re", "z_im", "c_re", "c_im"])
    for j, term in enumerate(recovered.model.terms):
        z = term.z
        for s, c in enumerate(term.coeffs):
            writer.writerow(
                [j, term.m, s]
                + [repr(float(v)) for v in (term.f.real, term.f.imag, z.real, z.imag)]
                + [repr(float(c.real)), repr(float(c.imag))]
            )
    return buffer.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    click.echo(f"Wrote {out}", err=True)


@click.group()
@click.version_option(package_name="pencil-prony")
def cli():
    """PencilProny: GSVD matrix-pencil estimation of exponential sums."""
    pass


@cli.command("estimate")
@click.option(
    "--input", "input_path", type=click.Path(path_type=Path),
    help="Sample CSV, one 're,im' per line",
)
@click.option("--k0", type=int, default=0, show_default=True, help="Index of the first sample")
@click.option("--mhat", default="auto", show_default=True, help="Hankel column count or 'auto'")
@click.option(
    "--cluster-tol", type=float, default=settings.cluster_tol, show_default=True,
    help="Relative radius for merging eigenvalues",
)
@click.option(
    "--noise-delta", type=float, default=0.0, show_default=True,
    help="Known noise level; switches the rank threshold to the noise floor",
)
@click.option("--out", type=click.Path(path_type=Path), help="Output file (stdout if omitted)")
@click.option(
    "--format", "output_format", type=click.Choice(["csv", "json"]), default="csv",
    show_default=True,
)
@click.option("--config", type=click.Path(path_type=Path), help="key=value defaults file")
@click.pass_context
def estimate_command(
    ctx, input_path, k0, mhat, cluster_tol, noise_delta, out, output_format, config
):
    """Recover a monomial-exponential sum from equispaced samples."""
    try:
        _apply_config_file(ctx, config)
        p = ctx.params
        if p["input_path"] is None:
            raise InputFormatError("Missing --input (or an input key in --config)")
        samples = read_samples_csv(p["input_path"], k0=p["k0"])
        if samples.count % 2:
            raise InputFormatError(
                f"{p['input_path']}: need an even number of samples, found {samples.count}"
            )
        n = samples.count // 2
        Mhat = _parse_mhat(str(p["mhat"]))
        Mhat = min(settings.mhat_cap, n) if Mhat is None else Mhat

        opts = EstimatorOptions(
            cluster_tol=p["cluster_tol"],
            rank_policy=RankPolicy(noise_delta=p["noise_delta"]),
        )
        recovered = estimate(samples, Mhat, opts)
        _emit(_format_recovered(recovered, p["output_format"]), p["out"])
    except InputFormatError as exc:
        _fail(str(exc), EXIT_INPUT)
    except PencilError as exc:
        _fail(str(exc), EXIT_ESTIMATION)
    except (OSError, ValueError) as exc:
        _fail(str(exc), EXIT_INPUT)


@cli.command("reproduce")
@click.argument("table", type=click.Choice([*TABLE_PRESETS, "all"]))
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option(
    "--out-dir", type=click.Path(path_type=Path), default=Path("results"),
    show_default=True,
)
@click.option("--timings", is_flag=True, help="Include per-row runtime columns")
@click.option("--workers", type=click.IntRange(min=1), help="Rows to run in parallel")
def reproduce_command(table, seed, out_dir, timings, workers):
    """Run a registered table preset (or all of table1..table12)."""
    runner_settings = settings
    if workers is not None:
        runner_settings = settings.model_copy(update={"workers": workers})
    runner = ExperimentRunner(runner_settings)

    table_ids = DEFAULT_TABLES if table == "all" else [table]
    try:
        written = reproduce_all(
            seed,
            out_dir,
            runner=runner,
            table_ids=table_ids,
            include_timings=timings or settings.include_timings,
        )
    except PencilError as exc:
        _fail(str(exc), EXIT_ESTIMATION)
    except OSError as exc:
        _fail(str(exc), EXIT_INPUT)
    else:
        for path in written:
            click.echo(str(path))


@cli.command("generate")
@click.argument("example_id", type=click.Choice([e.value for e in ExampleId]))
@click.option("--n", "N", type=int, default=10, show_default=True, help="Writes 2N samples")
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k0", type=int, default=0, show_default=True)
@click.option(
    "--interpretation", type=click.Choice(["exponent", "zero"]),
    help="Reading of the listed vectors of ex2-ex4",
)
@click.option("--out", type=click.Path(path_type=Path), help="Sample CSV to write")
@click.option("--config", type=click.Path(path_type=Path), help="key=value defaults file")
@click.pass_context
def generate_command(ctx, example_id, N, delta, seed, k0, interpretation, out, config):
    """Write 2N (optionally noisy) samples of a registered example."""
    try:
        _apply_config_file(ctx, config)
        p: dict[str, Any] = ctx.params
        if p["out"] is None:
            raise InputFormatError("Missing --out (or an out key in --config)")
        experiment = ExperimentConfig(
            example_id=p["example_id"],
            N=p["N"],
            delta=p["delta"],
            seed=p["seed"],
            k0=p["k0"],
            interpretation=p["interpretation"],
            output=p["out"],
        )
        model_seed, noise_seed = derive_seeds(experiment.seed)
        model, _ = generate_example(
            experiment.example_id, seed=model_seed, interpretation=experiment.interpretation
        )
        samples = sample(model, SampleGrid(k0=experiment.k0, count=2 * experiment.N))
        if experiment.delta > 0:
            samples = add_noise(samples, experiment.delta, noise_seed)
        write_samples_csv(samples, experiment.output)
        click.echo(str(experiment.output))
    except (InputFormatError, ValidationError, OSError) as exc:
        _fail(str(exc), EXIT_INPUT)
    except PencilError as exc:
        _fail(str(exc), EXIT_ESTIMATION)


def main() -> None:
    """Console script entry point."""
    cli()


if __name__ == "__main__":
    main()
