"""Error taxonomy shared across modules, aligned with the CLI exit codes:
configuration problems, data/schema problems, and verification failures."""

from __future__ import annotations

__all__ = ["ConfigError", "DataError", "VerificationError"]


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, out-of-range values, bad flags."""


class DataError(ValueError):
    """Input data violates a documented schema or value constraint."""


class VerificationError(RuntimeError):
    """A golden-value or recovery check failed."""
