"""Configuration management for the simulator and its verification harness."""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class QuadratureSettings(BaseSettings):
    """Real-space singular integral settings."""

    tolerance: float = 1e-10
    subdivision_limit: int = 500
    accept_roundoff: float = 1e-8  # abs. error still accepted when QUADPACK flags round-off
    calibration_modes: int = 8
    calibration_tolerance: float = 1e-6
    calibration_points: int = 64
    default_delta: float = 0.5


class HypothesisSettings(BaseSettings):
    """Theorem hypothesis checking settings."""

    eps: float = 0.1
    n_max: int = 8
    sobolev_margin: float = 0.01  # H^{alpha + 3/2 + margin}
    bisection_iterations: int = 60
    constant_slack: float = 0.5


class CharacteristicsSettings(BaseSettings):
    """Characteristic tracking and breaking detection settings."""

    n_seeds: int = 256
    max_order: int = 3
    fit_fraction: float = 0.3
    robust_fraction: float = 0.15
    fit_disagreement: float = 0.03
    steep_factor: float = 5.0
    refinement_agreement: float = 0.01
    refinement_check: bool = True


class OutputSettings(BaseSettings):
    """Output settings."""

    base_dir: str = "output"
    field_dumps: bool = True


class Settings(BaseSettings):
    """Main application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="WHITHAM_",
        env_nested_delimiter="__",
        extra="ignore",
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    workers: int = 4

    # Sub-settings
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)
    hypothesis: HypothesisSettings = Field(default_factory=HypothesisSettings)
    characteristics: CharacteristicsSettings = Field(default_factory=CharacteristicsSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)

    @classmethod
    def from_yaml(cls, config_path: Path | str) -> "Settings":
        """Load settings from YAML file and environment."""
        config_path = Path(config_path)

        if config_path.exists():
            with open(config_path) as f:
                yaml_config = yaml.safe_load(f) or {}
        else:
            yaml_config = {}

        return cls(**yaml_config)


def get_settings(config_path: Path | str | None = None) -> Settings:
    """Get application settings."""
    if config_path is None:
        # Look for config in default locations
        possible_paths = [
            Path("config/config.yaml"),
            Path("config.yaml"),
            Path.home() / ".config" / "whitham-breaking" / "config.yaml",
        ]
        for path in possible_paths:
            if path.exists():
                config_path = path
                break

    if config_path:
        return Settings.from_yaml(config_path)
    return Settings()


# Global settings instance
_settings: Settings | None = None


def init_settings(config_path: Path | str | None = None) -> Settings:
    """Initialize global settings."""
    global _settings
    _settings = get_settings(config_path)
    return _settings


def settings() -> Settings:
    """Get global settings instance."""
    global _settings
    if _settings is None:
        _settings = get_settings()
    return _settings


def use_settings(config: Settings) -> Settings:
    """Install an already built settings instance, e.g. inside a worker process."""
    global _settings
    _settings = config
    return _settings
