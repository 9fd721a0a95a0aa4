from __future__ import annotations


class UrllcUavError(Exception):
    """Base error; `code` is the token printed by the CLI on failure."""

    code = "error"


class ConfigurationError(UrllcUavError, ValueError):
    code = "config"


class OutOfAreaError(UrllcUavError, ValueError):
    code = "out_of_area"


class DegenerateGeometryError(UrllcUavError, ValueError):
    code = "degenerate_geometry"


class DomainError(UrllcUavError, ValueError):
    code = "domain"


class SupportError(UrllcUavError, ValueError):
    code = "gev_support"


class FitError(UrllcUavError, RuntimeError):
    code = "gev_fit"


class ConditioningError(UrllcUavError, RuntimeError):
    code = "conditioning"


class IncompleteDatasetError(UrllcUavError, ValueError):
    code = "incomplete_dataset"


class InfeasibleChannelError(UrllcUavError, ValueError):
    code = "infeasible_channel"


class MissingZoneModelError(UrllcUavError, KeyError):
    code = "missing_zone_model"

    def __str__(self) -> str:
        # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""


class InfeasibleStartError(UrllcUavError, RuntimeError):
    code = "infeasible_start"


class ProjectionError(UrllcUavError, RuntimeError):
    code = "projection_failure"


class ManifestMismatchError(UrllcUavError, RuntimeError):
    code = "manifest_mismatch"
