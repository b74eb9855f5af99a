"""Configuration management using YAML."""
import logging
from pathlib import Path
from typing import Literal
import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class SpectralConfig(BaseModel):
    """Tensor power method and tensor-estimate revision."""
    n_restarts: int = Field(default=10, ge=1)
    n_iters: int = Field(default=30, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    clamp_low: float = 0.001
    clamp_high: float = 0.999
    weight_floor: float = Field(default=1e-6, gt=0)
    n_permutations: int = Field(default=5, ge=1)  # tensor-alone baseline

    @model_validator(mode="after")
    def check_clamp(self) -> "SpectralConfig":
        if not 0.0 < self.clamp_low < self.clamp_high < 1.0:
            raise ValueError("clamp bounds must satisfy 0 < clamp_low < clamp_high < 1")
        return self


class EmConfig(BaseModel):
    """EM / CEM iteration control."""
    max_iters: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-8, gt=0)  # per-subject log-likelihood change
    param_floor: float = 1e-6

    @field_validator("param_floor")
    @classmethod
    def validate_floor(cls, v: float) -> float:
        if not 0.0 < v < 0.5:
            raise ValueError("param_floor must lie in (0, 0.5)")
        return v


class MethodsConfig(BaseModel):
    """Baseline estimation methods."""
    em_random_restarts: int = Field(default=5, ge=1)
    init_low: float = 0.1
    init_high: float = 0.9


class SelectionConfig(BaseModel):
    """Number-of-classes selection."""
    criterion: Literal["gic1", "gic2"] = "gic1"
    n_jobs: int = Field(default=1, ge=1)


class BenchmarkConfig(BaseModel):
    """Simulation benchmark harness."""
    reps: int = Field(default=20, ge=1)
    threads: int = Field(default=1, ge=1)


class OutputConfig(BaseModel):
    """Output files."""
    record_timing: bool = True


class LogFileConfig(BaseModel):
    """Log file configuration."""
    enabled: bool = False
    path: str = "logs/lcm.log"
    max_size_mb: int = 10
    backup_count: int = 3


class LogConsoleConfig(BaseModel):
    """Log console configuration."""
    enabled: bool = True


class LoggingConfig(BaseModel):
    """Logging configuration."""
    level: str = "WARNING"
    file: LogFileConfig = Field(default_factory=LogFileConfig)
    console: LogConsoleConfig = Field(default_factory=LogConsoleConfig)


class Settings(BaseModel):
    """Complete application settings."""
    spectral: SpectralConfig = Field(default_factory=SpectralConfig)
    em: EmConfig = Field(default_factory=EmConfig)
    methods: MethodsConfig = Field(default_factory=MethodsConfig)
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    benchmark: BenchmarkConfig = Field(default_factory=BenchmarkConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)


def load_config(config_path: str | Path = "config.yaml") -> Settings:
    """
    Load configuration from YAML file.

    Args:
        config_path: Path to config file (default: config.yaml)

    Returns:
        Settings object

    Raises:
        FileNotFoundError: If config file doesn't exist
        ValueError: If config is invalid
    """
    config_file = Path(config_path)

    if not config_file.exists():
        raise FileNotFoundError(
            f"Configuration file not found: {config_path}\n"
            f"💡 Copy config.yaml.example to config.yaml and edit it."
        )

    with open(config_file, 'r', encoding='utf-8') as f:
        config_data = yaml.safe_load(f) or {}

    try:
        settings = Settings(**config_data)
        logger.info(f"✅ Configuration loaded from {config_path}")
        return settings
    except Exception as e:
        raise ValueError(f"Invalid configuration: {e}")


# Global settings instance (loaded on import, defaults when no config.yaml)
try:
    settings = load_config()
except FileNotFoundError:
    logger.debug("No config.yaml found, using default settings")
    settings = Settings()
