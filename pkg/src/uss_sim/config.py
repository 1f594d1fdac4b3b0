import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class SimulatorConfig(BaseModel):
    """Process-wide settings read from the environment (and an optional .env file)."""
    seed: Optional[int] = Field(None, ge=0, lt=2**64, alias="USS_SEED",
                                description="Overrides base_seed of every run config")
    workers: int = Field(1, ge=1, alias="USS_WORKERS", description="Repetition parallelism degree")
    log_level: str = Field("WARNING", alias="USS_LOG_LEVEL", description="structlog filtering level")

    @field_validator("log_level")
    @classmethod
    def known_level(cls, v: str) -> str:
        v = v.strip().upper()
        if v not in _LEVELS:
            raise ValueError(f"USS_LOG_LEVEL must be one of {', '.join(_LEVELS)}, got '{v}'")
        return v

    @classmethod
    def from_env(cls, env_file: str = ".env") -> "SimulatorConfig":
        if os.path.exists(env_file):
            load_dotenv(env_file)

        values = {}
        raw_seed = os.getenv("USS_SEED", "").strip()
        if raw_seed:
            try:
                values["USS_SEED"] = int(raw_seed)
            except ValueError:
                raise ValueError(f"USS_SEED must be a nonnegative integer, got '{raw_seed}'")
            if values["USS_SEED"] < 0:
                raise ValueError(f"USS_SEED must be a nonnegative integer, got '{raw_seed}'")

        raw_workers = os.getenv("USS_WORKERS", "").strip()
        if raw_workers:
            try:
                values["USS_WORKERS"] = int(raw_workers)
            except ValueError:
                raise ValueError(f"USS_WORKERS must be a positive integer, got '{raw_workers}'")
            if values["USS_WORKERS"] < 1:
                raise ValueError(f"USS_WORKERS must be a positive integer, got '{raw_workers}'")

        raw_level = os.getenv("USS_LOG_LEVEL", "").strip()
        if raw_level:
            values["USS_LOG_LEVEL"] = raw_level
        return cls(**values)
