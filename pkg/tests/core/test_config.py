from __future__ import annotations

from pathlib import Path

import pytest

from urllc_uav.core.config import Settings
from urllc_uav.core.errors import MissingZoneModelError


def test_settings_read_prefixed_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("URLLC_UAV_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("URLLC_UAV_WORKERS", "3")
    s = Settings(_env_file=None)
    assert s.log_level == "DEBUG"
    assert s.workers == 3
    assert s.collect_chunk_blocks == 2000


def test_require_output_dir_creates_directory(tmp_path: Path) -> None:
    s = Settings(_env_file=None)
    out = s.require_output_dir(tmp_path / "a" / "b")
    assert out.is_dir()


def test_error_codes_and_builtin_bases() -> None:
    err = MissingZoneModelError("No trained zone model for zones [3]")
    assert err.code == "missing_zone_model"
    assert isinstance(err, KeyError)
    assert str(err) == "No trained zone model for zones [3]"
