"""
Runtime settings for nonlocal-spectra.

Values come from defaults, then a ``.env`` file, then ``NONLOCAL_SPECTRA_*``
environment variables, then explicit ``update_settings`` calls.
"""
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

ENV_PREFIX = "NONLOCAL_SPECTRA_"


class Settings(BaseModel):
    """Main settings class for nonlocal-spectra."""

    log_level: str = "INFO"
    jobs: Optional[int] = Field(default=None, ge=1)
    max_points: int = Field(default=5000, ge=4)
    output_dir: str = "results"

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()

    @classmethod
    def from_env(cls, environ: Optional[Dict[str, str]] = None) -> "Settings":
        """Build settings from ``NONLOCAL_SPECTRA_*`` variables."""
        environ = os.environ if environ is None else environ
        values: Dict[str, Any] = {}
        for name in cls.model_fields:
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw not in (None, ""):
                values[name] = raw
        return cls(**values)


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance.

    Returns:
        Settings: The global settings instance
    """
    global _settings
    if _settings is None:
        load_dotenv()
        _settings = Settings.from_env()
    return _settings


def update_settings(**kwargs) -> Settings:
    """Update the global settings with new values.

    Args:
        **kwargs: Settings to update

    Returns:
        Settings: the updated instance
    """
    global _settings
    current = get_settings()
    _settings = Settings(**{**current.model_dump(), **kwargs})
    return _settings


def reset_settings() -> None:
    """Forget cached settings; the next get_settings() re-reads the environment."""
    global _settings
    _settings = None
