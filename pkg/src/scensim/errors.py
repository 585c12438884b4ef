"""Exception types shared across the package."""

from __future__ import annotations


class SimError(Exception):
    """Base class for every error this package raises deliberately."""


class ScenarioParseError(SimError):
    """Document is not syntactically valid JSON."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"line {line} column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(SimError):
    """Document is well-formed JSON but semantically invalid.

    ``path`` locates the offending value, e.g. ``entities[1].path``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ConfigError(SimError):
    """Campaign or general-settings configuration problem."""


class StationRangeError(SimError):
    """Requested station lies outside [0, path length]."""


class TopicError(SimError):
    """Malformed topic name or subscription pattern, or misuse of a topic."""


class ServiceError(SimError):
    """Base class for request/response service failures."""


class ServiceUnavailableError(ServiceError):
    """No provider is registered for the requested service."""


class ServiceCallError(ServiceError):
    """A service provider raised while handling a request."""


class SensorError(SimError):
    """Sensor cannot be sampled, typically a missing or dead mount entity."""


class ActionError(SimError):
    """A scenario action could not be applied to the world."""


class StorageError(SimError):
    """Recording directory cannot be created or written."""


class RecordingIntegrityError(SimError):
    """Recorded files do not match the message counts seen on the bus."""


class RecordingLoadError(SimError):
    """Recording directory is missing, incomplete, or unparseable."""


class ExportError(SimError):
    """Requested topic cannot be exported from a recording."""


class EvaluationError(SimError):
    """A metric cannot be computed over the given trace."""
