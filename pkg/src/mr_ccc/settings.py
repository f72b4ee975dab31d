"""Settings management for MR-CCC."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support.

    Environment variables are prefixed with MRCCC_.
    Example: MRCCC_JOBS=8
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        env_prefix="MRCCC_",
    )

    # Run defaults
    jobs: int = Field(default=1, ge=1, description="Default worker processes for screen and benchmark")
    master_seed: int = Field(default=0, ge=0, le=2**64 - 1, description="Default master seed")
    ridge_lambda: float = Field(default=1e-6, gt=0, description="Ridge added to every inverted Gram matrix")

    # Logging settings
    log_level: str = Field(
        default="WARNING",
        description="Logging level (TRACE, DEBUG, INFO, WARNING, ERROR)",
    )
    log_format: str = Field(
        default="pretty",
        description="Log format: 'pretty' for colored output, 'json' for structured",
    )


# Global settings instance
settings = Settings()
