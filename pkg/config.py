"""
Configuration module for the ntest toolkit.

This module provides centralized configuration management using Pydantic
for strong typing and validation. Every field can be overridden with an
``NTEST_``-prefixed environment variable or a ``.env`` file.
"""

from typing import Optional, Sequence

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from utils.constants import (
    CALIBRATION_DIR,
    DEFAULT_CALIBRATION_REPS,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_JOBS,
    DEFAULT_POWER_REPS,
    DEFAULT_QUANTILE_GRID_SIZE,
    DEFAULT_SEED,
    DEFAULT_TEST_CALIBRATION_REPS,
    OUTPUT_DIR,
)


class NTestSettings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="NTEST_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Reproducibility
    seed: int = Field(default=DEFAULT_SEED, ge=0)

    # Replication counts
    calibration_reps: int = Field(default=DEFAULT_CALIBRATION_REPS, gt=0)
    power_reps: int = Field(default=DEFAULT_POWER_REPS, gt=0)
    test_calibration_reps: int = Field(default=DEFAULT_TEST_CALIBRATION_REPS, gt=0)

    # Worker pool
    chunk_size: int = Field(default=DEFAULT_CHUNK_SIZE, gt=0)
    jobs: int = Field(default=DEFAULT_JOBS, ge=1)

    # Calibration storage
    quantile_grid_size: int = Field(default=DEFAULT_QUANTILE_GRID_SIZE, ge=101)
    calibration_dir: str = CALIBRATION_DIR

    # Storage Configuration
    output_directory: str = OUTPUT_DIR

    # Logging Configuration
    log_level: str = "INFO"
    log_file: Optional[str] = None


# Global settings instance
settings = NTestSettings()


class StudyConfig:
    """Task layout and rough runtime estimate for one Monte Carlo study"""

    # Measured on one core: standard-normal samples of n=100 through N, JB, AD, SW
    SAMPLES_PER_SECOND = 60_000

    def __init__(
        self,
        reps: int,
        sample_sizes: Sequence[int],
        cells: int = 1,
        jobs: Optional[int] = None,
        chunk_size: Optional[int] = None,
    ):
        self.reps = reps
        self.sample_sizes = tuple(sample_sizes)
        self.cells = cells
        self.jobs = jobs if jobs is not None else settings.jobs
        self.chunk_size = chunk_size if chunk_size is not None else settings.chunk_size

    @property
    def chunks_per_cell(self) -> int:
        return max(1, (self.reps + self.chunk_size - 1) // self.chunk_size)

    def get_run_estimate(self) -> dict:
        """Get chunk counts and an order-of-magnitude duration for the study"""
        work = sum(self.reps * n / 100.0 for n in self.sample_sizes) * self.cells
        estimated_seconds = work / (self.SAMPLES_PER_SECOND * self.jobs)

        return {
            "reps": self.reps,
            "sample_sizes": list(self.sample_sizes),
            "cells": self.cells,
            "chunks_per_cell": self.chunks_per_cell,
            "total_chunks": self.chunks_per_cell * self.cells * len(self.sample_sizes),
            "jobs": self.jobs,
            "estimated_duration_minutes": round(estimated_seconds / 60.0, 1),
        }
