from __future__ import annotations

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="URLLC_UAV_", extra="ignore"
    )

    log_level: str = "INFO"
    output_dir: Path = Path("./runs")

    # process pool size for (zone, position) collection/fitting tasks
    workers: int = Field(default=1, ge=1)

    # blocks simulated per RNG substream during collection
    collect_chunk_blocks: int = Field(default=2000, ge=1)

    # -----------------------------
    # Required-path helpers
    # -----------------------------

    def require_output_dir(self, out: Path | None = None) -> Path:
        path = out if out is not None else self.output_dir
        path.mkdir(parents=True, exist_ok=True)
        return path


settings = Settings()
