from __future__ import annotations

import os
import tempfile
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, TypeVar

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from pydantic import BaseModel, ValidationError

from urllc_uav.core.errors import ConfigurationError, ManifestMismatchError
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.experiment import ExperimentConfig, config_hash

ArrayF64 = NDArray[np.float64]
DocT = TypeVar("DocT", bound=BaseModel)

FLOAT_FORMAT = "%.17g"

MANIFEST_FILE = "manifest.json"
FITS_FILE = "fits.json"
ZONE_MODELS_FILE = "zone_models.json"
COMPARISON_FILE = "comparison.csv"


def samples_filename(zone: ZoneId, position_index: int) -> str:
    return f"samples_z{zone}_k{position_index:03d}.csv"


def placement_filename(scheme: str) -> str:
    return f"placement_{scheme}.json"


def evaluation_filename(scheme: str) -> str:
    return f"evaluation_{scheme}.json"


def ccdf_filename(scheme: str) -> str:
    return f"ccdf_{scheme}.csv"


def fit_ccdf_filename(zone: ZoneId, position_index: int) -> str:
    return f"ccdf_fit_z{zone}_k{position_index:03d}.csv"


def heldout_ccdf_filename(zone: ZoneId) -> str:
    return f"ccdf_heldout_z{zone}.csv"


def params_map_filename(zone: ZoneId) -> str:
    return f"params_map_z{zone}.csv"


def require_matching_hash(found: str, config: ExperimentConfig, path: Path) -> None:
    expected = config_hash(config)
    if found != expected:
        raise ManifestMismatchError(
            f"{path} was produced with config hash {found[:12]}..., "
            f"current config hashes to {expected[:12]}...; use a fresh --out directory"
        )


@contextmanager
def atomic_writer(path: Path) -> Iterator[IO[str]]:
    """
    Text handle on a temporary sibling of `path`, renamed over `path` on success.

    On error the temporary file is removed and `path` is left untouched.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    tmp = Path(tmp_name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def write_json_document(path: Path, document: BaseModel) -> None:
    with atomic_writer(path) as handle:
        handle.write(document.model_dump_json(indent=2))
        handle.write("\n")


def read_json_document(path: Path, model: type[DocT]) -> DocT:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ConfigurationError(f"Missing input file: {path}") from e
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise ConfigurationError(f"{path} is not a valid {model.__name__}: {e}") from e


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    with atomic_writer(path) as handle:
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_samples_csv(path: Path, values: ArrayF64, metadata: Mapping[str, Any]) -> None:
    """One `value` column after `# key=value` metadata lines."""
    with atomic_writer(path) as handle:
        for key, value in metadata.items():
            handle.write(f"# {key}={value}\n")
        pd.DataFrame({"value": np.asarray(values, dtype=float)}).to_csv(
            handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )


def read_samples_csv(path: Path) -> tuple[ArrayF64, dict[str, str]]:
    metadata: dict[str, str] = {}
    try:
        with path.open(encoding="utf-8") as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value.strip()
    except FileNotFoundError as e:
        raise ConfigurationError(f"Missing sample file: {path}") from e

    frame = pd.read_csv(
        path, comment="#", dtype={"value": "float64"}, float_precision="round_trip"
    )
    if "value" not in frame.columns:
        raise ConfigurationError(f"{path} has no 'value' column")
    values: ArrayF64 = frame["value"].to_numpy(dtype=float)
    return values, metadata
