"""Process-level settings read from ``CEA_*`` environment variables or a ``.env`` file."""

from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Attributes:
        threads: Worker threads for experiment jobs (default: executor's choice)
        log_level: Root log level
        log_json: Emit JSON log lines
    """
    model_config = SettingsConfigDict(env_prefix="CEA_", env_file=".env", extra="ignore")

    threads: Optional[int] = Field(default=None, ge=1)
    log_level: str = "INFO"
    log_json: bool = False


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
