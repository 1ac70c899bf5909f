"""Structured logging: structlog when installed, stdlib logging otherwise.

Usage::

    from gpas_summarizer.logging import get_logger

    _log = get_logger(__name__)
    _log.info("train.epoch_done", epoch=3, train_loss=0.41)

Event names are dotted and lower-case.  Numpy arrays, numpy scalars and
tensor nodes in an event are summarised before rendering, so
``_log.debug("model.step", h=h)`` prints ``TensorNode(shape=(8, 64))`` rather
than 512 numbers.  Both backends write through the stdlib ``gpas_summarizer``
logger, whose level :func:`configure_logging` sets.
"""

from __future__ import annotations

import logging
import sys
from functools import partialmethod
from typing import Any

import numpy as np

#: Arrays at or below this many elements are logged verbatim as lists.
SMALL_ARRAY_LIMIT = 8

_ROOT = "gpas_summarizer"


def _describe_array(arr: np.ndarray) -> Any:
    if arr.size <= SMALL_ARRAY_LIMIT:
        return arr.tolist()
    return f"ndarray(shape={tuple(arr.shape)}, dtype={arr.dtype})"


def _summarize_value(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return _describe_array(value)
    if isinstance(value, np.generic):
        return value.item()
    data = getattr(value, "data", None)
    if isinstance(data, np.ndarray) and hasattr(value, "requires_grad"):
        return f"TensorNode(shape={tuple(data.shape)})"
    if isinstance(value, dict):
        return {k: _summarize_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return type(value)(_summarize_value(v) for v in value)
    return value


def _summarize_arrays(event_dict: dict[str, Any]) -> dict[str, Any]:
    """Return a new event dict with arrays, numpy scalars and tensor nodes made short and plain."""
    return {key: _summarize_value(value) for key, value in event_dict.items()}


class _StderrHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Writes to whatever ``sys.stderr`` is when a record is emitted."""

    @property  # type: ignore[override]
    def stream(self) -> Any:
        return sys.stderr

    @stream.setter
    def stream(self, value: Any) -> None:
        pass


def configure_logging(level: int | str = logging.WARNING) -> None:
    """Set the package log level and attach a stderr handler once.

    Args:
        level: A :mod:`logging` level or its name, e.g. ``"INFO"``.
    """
    root = logging.getLogger(_ROOT)
    root.setLevel(level.upper() if isinstance(level, str) else level)
    if not any(isinstance(h, _StderrHandler) for h in root.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s"))
        root.addHandler(handler)


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

try:
    import structlog

    _BACKEND = "structlog"

    def _array_processor(logger: Any, method_name: str, event_dict: dict[str, Any]) -> dict[str, Any]:
        return _summarize_arrays(event_dict)

    if not structlog.is_configured():
        structlog.configure(
            processors=[
                structlog.contextvars.merge_contextvars,
                structlog.stdlib.filter_by_level,
                structlog.stdlib.add_log_level,
                structlog.stdlib.add_logger_name,
                structlog.processors.TimeStamper(fmt="iso"),
                structlog.processors.StackInfoRenderer(),
                structlog.processors.format_exc_info,
                _array_processor,
                structlog.dev.ConsoleRenderer() if sys.stderr.isatty() else structlog.processors.JSONRenderer(),
            ],
            wrapper_class=structlog.stdlib.BoundLogger,
            context_class=dict,
            logger_factory=structlog.stdlib.LoggerFactory(),
            cache_logger_on_first_use=True,
        )

    def get_logger(name: str | None = None, **initial_values: Any) -> Any:
        """Return a structlog bound logger named ``name`` with ``initial_values`` bound."""
        return structlog.get_logger(name or _ROOT, **initial_values)

except ImportError:
    _BACKEND = "logging"

    class _StdlibStructuredLogger:
        """The structlog call style (``log.info("event", key=value)``) over a stdlib logger."""

        def __init__(self, logger: logging.Logger, **bound: Any) -> None:
            self._logger = logger
            self._bound: dict[str, Any] = bound

        def bind(self, **new_values: Any) -> _StdlibStructuredLogger:
            return _StdlibStructuredLogger(self._logger, **{**self._bound, **new_values})

        def unbind(self, *keys: str) -> _StdlibStructuredLogger:
            return _StdlibStructuredLogger(self._logger, **{k: v for k, v in self._bound.items() if k not in keys})

        def _emit(self, level: int, event: str, *, exc_info: bool = False, **kw: Any) -> None:
            if not self._logger.isEnabledFor(level):
                return
            fields = _summarize_arrays({**self._bound, **kw})
            text = f"{event} " + " ".join(f"{k}={v!r}" for k, v in fields.items()) if fields else event
            self._logger.log(level, text, exc_info=exc_info)

        debug = partialmethod(_emit, logging.DEBUG)
        info = partialmethod(_emit, logging.INFO)
        warning = partialmethod(_emit, logging.WARNING)
        error = partialmethod(_emit, logging.ERROR)
        exception = partialmethod(_emit, logging.ERROR, exc_info=True)

    def get_logger(name: str | None = None, **initial_values: Any) -> Any:  # type: ignore[misc]
        """Return a stdlib-backed logger with the structlog call style."""
        return _StdlibStructuredLogger(logging.getLogger(name or _ROOT), **initial_values)


def get_backend() -> str:
    """Return the name of the active logging backend ('structlog' or 'logging')."""
    return _BACKEND
