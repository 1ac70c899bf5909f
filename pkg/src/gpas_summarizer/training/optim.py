"""Adam with global-norm clipping and the step-decay learning-rate schedule."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from gpas_summarizer.autodiff import TensorNode
from gpas_summarizer.exceptions import ConfigurationError, DimensionError, NumericError


def lr_at(epoch: int, lr0: float = 3e-4, decay: float = 1.25, every: int = 3) -> float:
    """Learning rate of ``epoch``: ``lr0 / decay ** floor(epoch / every)``."""
    if epoch < 0:
        msg = f"epoch must be non-negative, got {epoch}"
        raise ConfigurationError(msg)
    return lr0 / decay ** (epoch // every)


@dataclass
class AdamState:
    """First and second moments per parameter, plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(
        cls, params: Mapping[str, TensorNode], *, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ) -> AdamState:
        return cls(
            m={name: np.zeros_like(node.data) for name, node in params.items()},
            v={name: np.zeros_like(node.data) for name, node in params.items()},
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )

    def arrays(self) -> dict[str, np.ndarray]:
        """Moments as ``m/<name>`` and ``v/<name>`` blocks."""
        out = {f"m/{name}": value for name, value in self.m.items()}
        out.update({f"v/{name}": value for name, value in self.v.items()})
        return out

    @classmethod
    def from_arrays(
        cls,
        arrays: Mapping[str, np.ndarray],
        step: int,
        *,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> AdamState:
        m = {k[2:]: np.array(a) for k, a in arrays.items() if k.startswith("m/")}
        v = {k[2:]: np.array(a) for k, a in arrays.items() if k.startswith("v/")}
        return cls(m=m, v=v, step=step, beta1=beta1, beta2=beta2, eps=eps)


def gradients(params: Mapping[str, TensorNode]) -> dict[str, np.ndarray]:
    """Current gradients, zeros where no gradient reached a parameter."""
    return {name: np.zeros_like(node.data) if node.grad is None else node.grad for name, node in params.items()}


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Rescale so the global norm is at most ``max_norm`` (``0`` disables clipping).

    Returns:
        ``(clipped gradients, norm before clipping)``.
    """
    norm = global_norm(grads)
    if not math.isfinite(norm):
        msg = "gradient norm is not finite"
        raise NumericError(msg)
    if max_norm <= 0.0 or norm <= max_norm:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def adam_step(
    params: Mapping[str, TensorNode],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """Bias-corrected Adam update of every parameter, in place.

    Raises:
        DimensionError: If a gradient or moment does not match its parameter.
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for name, node in params.items():
        g = grads[name]
        if g.shape != node.data.shape or state.m[name].shape != node.data.shape:
            msg = f"adam_step: gradient {g.shape} / moment {state.m[name].shape} do not match {name} {node.shape}"
            raise DimensionError(msg)
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        state.m[name], state.v[name] = m, v
        node.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
