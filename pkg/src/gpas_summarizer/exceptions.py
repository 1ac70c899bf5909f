"""Custom exceptions for the gpas-summarizer library."""

from __future__ import annotations


class GPaSError(Exception):
    """Base exception for all gpas-summarizer errors."""


class DimensionError(GPaSError):
    """Raised when tensor shapes do not agree.

    The message always names every shape involved so the offending
    call site can be found from the log line alone.
    """


class IndexLookupError(GPaSError, LookupError):
    """Raised when a row or token index falls outside its table."""


class NumericError(GPaSError):
    """Raised when a computation meets NaN or infinite values."""


class BackwardError(GPaSError):
    """Raised when reverse-mode differentiation is misused.

    Common causes: a non-scalar loss, calling ``backward`` twice on the same
    trace without ``reset``, or a loss whose graph mixes two traces.
    """


class OracleInvalidError(GPaSError):
    """Raised when the finite-difference oracle cannot be trusted.

    The function under test returned two different values for identical
    parameters, so central differences would measure noise, not slope.
    """


class CorpusParseError(GPaSError):
    """Raised when a corpus or vocabulary file cannot be parsed."""


class SchemaError(GPaSError):
    """Raised when a parsed record violates the corpus schema.

    Common causes: wrong number of segments, visual vectors of the wrong
    dimension, or duplicate record ids within a split.
    """


class ConfigurationError(GPaSError):
    """Raised when a model, training, or synthetic-corpus config is invalid."""


class DegenerateBatchError(GPaSError):
    """Raised when every position of a batch is masked out of the loss."""


class UndefinedScoreError(GPaSError):
    """Raised when a confidence score is requested for an empty sentence."""


class MetricError(GPaSError):
    """Raised when a captioning metric receives an unusable corpus."""


class CheckpointError(GPaSError):
    """Raised when a checkpoint cannot be written, read, or verified.

    Common causes: a missing or unexpected parameter block, a shape that
    disagrees with the stored config, or a truncated file.
    """


class SerializationError(GPaSError):
    """Raised when JSON serialization fails."""
