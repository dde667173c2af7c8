"""Configuration management with Pydantic Settings."""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = Field(default="PencilProny", description="Application name")
    debug: bool = Field(default=False, description="Debug mode")

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    log_format: str = Field(default="json", description="Log format: json or text")

    # Estimator defaults
    cluster_tol: float = Field(
        default=1e-3, gt=0, description="Relative radius for eigenvalue clustering"
    )
    sigma_floor: float = Field(
        default=1e-12,
        gt=0,
        description="Smallest admissible Sigma^{k0} diagonal relative to its max",
    )
    noise_floor_factor: float = Field(
        default=10.0, gt=0, description="Noise floor = factor * delta * sqrt(rows*cols)"
    )
    use_all_samples: bool = Field(
        default=True, description="Solve coefficients over all 2N samples"
    )
    pencil_form: Literal["reduced", "premultiplied"] = Field(
        default="reduced", description="Route used to extract pencil eigenvalues"
    )
    truncation: Literal["auto", "columns", "subspace"] = Field(
        default="auto",
        description="Reduce the pencil to the first M columns or to the leading "
        "rank-M subspace of the sample window (auto: subspace under noise)",
    )
    cluster_noise_factor: float = Field(
        default=10.0,
        gt=0,
        description="Noisy clustering radius = factor * sqrt(threshold / sigma_M)",
    )
    cluster_tol_max: float = Field(
        default=1.5e-2, gt=0, description="Cap on the noise-widened clustering radius"
    )
    rescale_exact: bool = Field(
        default=True,
        description="Rescale strongly decaying or growing exact samples before the pencil",
    )

    # Harness
    mhat_cap: int = Field(default=10, ge=1, description="Auto policy Mhat = min(cap, N)")
    exponent_interpretation: Literal["exponent", "zero"] = Field(
        default="exponent",
        description="How the listed vectors of Examples 2-4 are read",
    )
    csv_float_format: str = Field(default="%.2e", description="CSV float format")
    workers: int = Field(default=1, ge=1, description="Parallel rows per table")
    include_timings: bool = Field(
        default=False, description="Write row runtimes into CSV/JSON outputs"
    )


def get_settings() -> Settings:
    """Get application settings instance."""
    return Settings()


# Global settings instance
settings = get_settings()
