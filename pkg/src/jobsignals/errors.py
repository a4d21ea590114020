"""Exception types shared across the pipeline.

All errors raised by this package derive from :class:`JobSignalsError` so
callers can catch pipeline failures with a single except clause.  Parse and
canonicalization failures carry enough context (variable, offending value)
to be actionable in logs.
"""

from __future__ import annotations


class JobSignalsError(Exception):
    """Base class for all package errors."""


class UnmappableLabel(JobSignalsError):
    """A raw label could not be canonicalized to a boolean value."""

    def __init__(self, variable: str, raw: str) -> None:
        super().__init__(f"cannot map {raw!r} to a boolean for variable {variable!r}")
        self.variable = variable
        self.raw = raw


class NoObjectFound(JobSignalsError):
    """A backend completion contained no balanced JSON object."""


class SchemaMismatch(JobSignalsError):
    """A parsed object lacks required keys or holds out-of-range values."""


class UnknownVariable(JobSignalsError):
    """A variable name outside the four supported signals."""


class Unsalvageable(JobSignalsError):
    """A posting body could not be reduced to usable plain text."""


class TooShort(JobSignalsError):
    """Text has too few tokens for language detection."""


class EmptyBatch(JobSignalsError):
    """An operation requiring at least one record got an empty batch."""


class SampleTooLarge(JobSignalsError):
    """Requested sample size exceeds the batch size."""


class EmptyText(JobSignalsError):
    """Chunking requires non-empty text."""


class InvalidOverlap(JobSignalsError):
    """Chunk overlap must satisfy 0 <= overlap < max_tokens."""


class DimensionMismatch(JobSignalsError):
    """Query vector dimension does not match the index dimension."""


class ProviderFailure(JobSignalsError):
    """An embedding provider returned an unusable vector or failed outright."""

    def __init__(self, message: str, chunk_index: int | None = None) -> None:
        super().__init__(message)
        self.chunk_index = chunk_index


class TransportError(JobSignalsError):
    """A backend call failed at the transport level (timeout, I/O, HTTP 5xx)."""


class CheckpointCorrupt(JobSignalsError):
    """The resume checkpoint file is unreadable or inconsistent with the input."""


class InsufficientData(JobSignalsError):
    """Metrics require at least two labeled pairs."""


class JoinFailure(JobSignalsError):
    """Annotation records reference posting ids missing from the postings file."""


class ConfigError(JobSignalsError):
    """Pipeline configuration is invalid or references missing paths."""
