from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from pathlib import Path
from typing import Annotated, cast

import typer
from pydantic import ValidationError

from urllc_uav.core.config import settings
from urllc_uav.core.errors import ConfigurationError
from urllc_uav.harness.schema import Scheme
from urllc_uav.scenario.experiment import ExperimentConfig, load_config, preset_config
from urllc_uav.scenario.mobility import Distribution

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
HANDLER_NAME = "urllc_uav"

ConfigOpt = Annotated[
    Path | None,
    typer.Option("--config", help="Experiment TOML file (default: the full preset)"),
]
PresetOpt = Annotated[
    str | None, typer.Option("--preset", help="Named preset used when --config is absent")
]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="Override master_seed")]
OutOpt = Annotated[
    Path | None, typer.Option("--out", help="Artifact directory (default: settings.output_dir)")
]


class SchemeName(StrEnum):
    PROPOSED = "proposed"
    FIXED = "fixed"
    RANDOM = "random"

    @property
    def scheme(self) -> Scheme:
        return cast(Scheme, self.value)


SchemeOpt = Annotated[SchemeName, typer.Option("--scheme", help="Placement scheme")]
DistributionOpt = Annotated[
    Distribution, typer.Option("--distribution", help="VUE distribution over zones")
]
PlacedDistributionOpt = Annotated[
    Distribution | None,
    typer.Option("--distribution", help="Require the placement to use this distribution"),
]
WorkersOpt = Annotated[
    int | None, typer.Option("--workers", min=1, help="Process pool size (default: settings)")
]


def configure_logging(level: str) -> None:
    """Install one stderr handler on the root logger; repeated calls replace it."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == HANDLER_NAME:
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(HANDLER_NAME)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level.upper())


@contextmanager
def command_scope() -> Iterator[None]:
    """
    Error boundary for CLI commands.
    Any failure becomes one `error code=<code> message=<message>` line on stderr and exit 1.
    """
    try:
        yield
    except typer.Exit:
        raise
    except Exception as e:
        code = getattr(e, "code", "internal")
        message = " ".join(str(e).split()) or type(e).__name__
        typer.echo(f"error code={code} message={message}", err=True)
        raise typer.Exit(code=1) from e


def resolve_config(
    config: Path | None, *, preset: str | None = None, seed: int | None = None
) -> ExperimentConfig:
    if config is not None and preset is not None:
        raise ConfigurationError("Pass either --config or --preset, not both")
    resolved = load_config(config) if config is not None else preset_config(preset or "full")
    if seed is not None:
        data = resolved.model_dump()
        data["master_seed"] = seed
        try:
            resolved = ExperimentConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid --seed {seed}: {e.errors()[0]['msg']}") from e
    return resolved


def resolve_out(out: Path | None) -> Path:
    return settings.require_output_dir(out)
