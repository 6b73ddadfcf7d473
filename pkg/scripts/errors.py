#!/usr/bin/env python3
"""
Exception hierarchy for the salt cavern potential engine.

All errors raised on purpose by the pipeline derive from SaltCavernError,
so the CLI can map them to exit codes:
- ValidationError and its subclasses -> exit code 1
- everything else -> exit code 2
"""

from typing import Optional


class SaltCavernError(Exception):
    """Base class for all engine errors."""


class ValidationError(SaltCavernError, ValueError):
    """Invalid parameter, configuration or input value."""


class SchemaError(ValidationError):
    """
    A required property is missing or has the wrong type.

    Attributes:
        feature_id (str): Identifier of the offending feature (if known)
        location (str): Position inside the input, e.g. "features[3]"
    """

    def __init__(self, message: str, feature_id: Optional[str] = None, location: Optional[str] = None):
        self.feature_id = feature_id
        self.location = location
        prefix = ""
        if location:
            prefix += f"{location}: "
        if feature_id:
            prefix += f"feature '{feature_id}': "
        super().__init__(prefix + message)


class GeometryError(ValidationError):
    """Geometry is invalid and could not be repaired."""

    def __init__(self, message: str, feature_id: Optional[str] = None, location: Optional[str] = None):
        self.feature_id = feature_id
        self.location = location
        prefix = f"{location}: " if location else ""
        if feature_id:
            prefix += f"feature '{feature_id}': "
        super().__init__(prefix + message)


class SplitRequiredError(ValidationError):
    """Deposit is too large for a single local projection."""


class CompressibilityRangeError(SaltCavernError, ValueError):
    """Pressure/temperature query outside the compressibility table."""


class DepthWindowError(SaltCavernError):
    """A cavern does not fit into the admissible depth window."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class DatasetMismatchError(SaltCavernError):
    """Two runs were produced from different input datasets."""


class StageError(SaltCavernError):
    """
    Failure inside a pipeline stage.

    Attributes:
        stage (str): Pipeline stage name (e.g. "eligibility")
        entity (str): Entity being processed (deposit id, country, ...)
    """

    def __init__(self, stage: str, entity: Optional[str], cause: Exception):
        self.stage = stage
        self.entity = entity
        self.cause = cause
        where = f"{stage}" + (f" [{entity}]" if entity else "")
        super().__init__(f"{where}: {cause}")

    def __reduce__(self):
        # Rebuilt from its fields when crossing worker process boundaries
        return (StageError, (self.stage, self.entity, self.cause))
