"""Adam with bias-corrected moment estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: dict, learning_rate: float = 1e-3, **kw) -> "AdamState":
        zeros = {k: np.zeros_like(v) for k, v in params.items()}
        return cls(zeros, {k: np.zeros_like(v) for k, v in params.items()}, 0, learning_rate, **kw)


def adam_step(params: dict, grads: dict, state: AdamState):
    """Update ``params`` and ``state`` in place; both are also returned."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        dt = p.dtype.type
        m = state.m[name]
        v = state.v[name]
        m *= dt(b1)
        m += dt(1.0 - b1) * g
        v *= dt(b2)
        v += dt(1.0 - b2) * (g * g)
        m_hat = m / dt(corr1)
        v_hat = v / dt(corr2)
        p -= dt(state.learning_rate) * m_hat / (np.sqrt(v_hat) + dt(state.eps))
    return params, state
