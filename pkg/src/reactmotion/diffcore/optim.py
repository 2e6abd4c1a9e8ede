from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParamStore


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class OptimizerState:
    lr: float = 0.01
    rho: float = 0.9
    eps: float = 1e-8
    accum: dict[str, np.ndarray] = field(default_factory=dict)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    norm = global_norm(grads)
    if max_norm is None or max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


def rmsprop_step(params: ParamStore, grads: dict[str, np.ndarray],
                 state: OptimizerState) -> tuple[ParamStore, OptimizerState]:
    """One RMSprop update, in place.

    accum <- rho*accum + (1-rho)*g^2 ;  theta <- theta - lr*g/(sqrt(accum)+eps)
    Parameters absent from ``grads`` are left alone.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for parameter {name!r}")
    for name, g in grads.items():
        theta = params[name]
        if g.shape != theta.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {name!r} {theta.shape}")
        acc = state.accum.get(name)
        if acc is None:
            acc = state.accum[name] = np.zeros_like(theta)
        acc *= state.rho
        acc += (1.0 - state.rho) * g * g
        theta -= state.lr * g / (np.sqrt(acc) + state.eps)
    return params, state
