"""Finite-difference gradient checking.

The checker compares reverse-mode gradients against central differences
``(f(θ + eps) − f(θ − eps)) / (2·eps)`` for every scalar parameter, using the
relative error ``|g_ad − g_fd| / max(1, |g_ad|, |g_fd|)``.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from gpas_summarizer.autodiff.tensor import TensorNode, backward, no_grad, trace
from gpas_summarizer.exceptions import OracleInvalidError
from gpas_summarizer.logging import get_logger

_log = get_logger(__name__)

LossFn = Callable[[Mapping[str, TensorNode]], TensorNode]


@dataclass(frozen=True)
class EntryError:
    """Comparison for a single scalar parameter."""

    name: str
    index: tuple[int, ...]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    """Outcome of :func:`grad_check`.

    Attributes:
        tol: Relative-error tolerance the check was run with.
        checked: Number of scalar parameters compared.
        max_rel_error: Largest relative error seen.
        per_group: Largest relative error per parameter name.
        worst: The worst offenders, largest error first.
    """

    tol: float
    checked: int = 0
    max_rel_error: float = 0.0
    per_group: dict[str, float] = field(default_factory=dict)
    worst: list[EntryError] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def to_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "checked": self.checked,
            "max_rel_error": self.max_rel_error,
            "per_group": dict(self.per_group),
            "worst": [
                {
                    "name": e.name,
                    "index": list(e.index),
                    "analytic": e.analytic,
                    "numeric": e.numeric,
                    "rel_error": e.rel_error,
                }
                for e in self.worst
            ],
        }


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def _evaluate(f: LossFn, params: Mapping[str, TensorNode]) -> float:
    with no_grad():
        return f(params).item()


def grad_check(
    f: LossFn,
    params: Mapping[str, TensorNode],
    *,
    eps: float = 1e-5,
    tol: float = 1e-4,
    worst_k: int = 10,
    max_entries: int | None = None,
) -> GradCheckReport:
    """Check ``backward`` against central differences for every parameter entry.

    Args:
        f: Deterministic scalar-valued function of ``params`` (dropout off or
            its mask frozen by a fixed stream).
        params: Named leaf nodes; each is perturbed in place and restored.
        eps: Central-difference step.
        tol: Maximum accepted relative error.
        worst_k: How many offenders the report keeps.
        max_entries: Check at most this many entries per parameter (evenly
            spaced); ``None`` checks all of them.

    Returns:
        A :class:`GradCheckReport`.

    Raises:
        OracleInvalidError: If two evaluations of ``f`` at the same point differ.
    """
    for node in params.values():
        node.requires_grad = True
        node.zero_grad()
    with trace():
        loss = f(params)
        backward(loss)
    base = loss.item()
    again = _evaluate(f, params)
    if again != base:
        msg = f"loss is not deterministic: {base!r} then {again!r}; freeze dropout or fix the stream"
        raise OracleInvalidError(msg)

    report = GradCheckReport(tol=tol)
    entries: list[EntryError] = []
    for name, node in params.items():
        analytic = np.zeros_like(node.data) if node.grad is None else node.grad.copy()
        flat = node.data.reshape(-1)
        positions = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            positions = np.unique(np.linspace(0, flat.size - 1, max_entries).astype(np.int64))
        group_max = 0.0
        for pos in positions:
            original = flat[pos]
            flat[pos] = original + eps
            up = _evaluate(f, params)
            flat[pos] = original - eps
            down = _evaluate(f, params)
            flat[pos] = original
            numeric = (up - down) / (2.0 * eps)
            g_ad = float(analytic.reshape(-1)[pos])
            err = relative_error(g_ad, numeric)
            group_max = max(group_max, err)
            entries.append(
                EntryError(name, tuple(int(i) for i in np.unravel_index(pos, node.shape)), g_ad, numeric, err)
            )
        report.per_group[name] = group_max
        report.checked += int(positions.size)
        _log.debug("gradcheck.group_done", group=name, entries=int(positions.size), max_rel_error=group_max)

    entries.sort(key=lambda e: e.rel_error, reverse=True)
    report.worst = entries[:worst_k]
    report.max_rel_error = entries[0].rel_error if entries else 0.0
    _log.info("gradcheck.done", checked=report.checked, max_rel_error=report.max_rel_error, passed=report.passed)
    return report
