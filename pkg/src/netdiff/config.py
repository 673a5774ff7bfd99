from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="NETDIFF_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Worker pool (NETDIFF_WORKERS); --workers overrides
    workers: int = Field(default=1, ge=1)

    log_level: str = "INFO"
    out_dir: str = "out"


settings = Settings()
