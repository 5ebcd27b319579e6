"""Configuration settings for markov-copula."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix ``MARKOV_COPULA_``)."""

    # Concurrency
    threads: int = 0  # 0 = one worker per CPU

    # Logging
    log_level: str = "WARNING"
    log_format: str = "console"

    # Default probe grid: log-spaced times scaled by 1/max exit rate
    default_probe_count: int = 16
    default_probe_min: float = 0.01
    default_probe_max: float = 4.0

    # Consistency checks
    default_event_depth: int = 2

    # Simulation
    default_seed: int = 20240101
    default_paths: int = 10_000

    # Reports
    report_include_timing: bool = False

    model_config = SettingsConfigDict(
        env_prefix="MARKOV_COPULA_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


# Global settings instance
settings = Settings()
